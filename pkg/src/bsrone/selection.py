"""TOPSIS-style ranking of candidates for super-node promotion.

Four criteria, in this column order: bandwidth, time on network, ID-exchange
count and willingness to cooperate. The exchange count is a cost criterion;
it enters the decision matrix as ``K+ - k`` (floored at zero) so that every
column is "larger is better". Its bounds are mapped the same way, giving an
upper bound ``K+ - K-`` and a lower bound of zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

CRITERIA = ("bandwidth", "time_on_network", "id_exchanges", "willingness")


class NormalizationError(ValueError):
    pass


class DegenerateBoundsWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class CriteriaWeights:
    bandwidth: float
    time_on_network: float
    id_exchanges: float
    willingness: float

    def __post_init__(self):
        vals = self.as_tuple()
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ValueError(f"weights must lie in [0, 1]: {vals}")
        if abs(math.fsum(vals) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {math.fsum(vals)}")

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.bandwidth, self.time_on_network, self.id_exchanges, self.willingness)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)


@dataclass(frozen=True)
class CriteriaBounds:
    upper: Tuple[float, float, float, float]
    lower: Tuple[float, float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        if len(self.upper) != 4 or len(self.lower) != 4:
            raise ValueError("bounds need exactly four components")
        for name, hi, lo in zip(CRITERIA, self.upper, self.lower):
            if lo > hi:
                raise ValueError(f"{name}: lower bound {lo} exceeds upper bound {hi}")
            if hi <= 0:
                raise ValueError(f"{name}: upper bound must be positive, got {hi}")
        for v in (self.upper[3], self.lower[3]):
            if v != int(v) or not 0 <= v <= 10:
                raise ValueError(f"willingness bounds must lie in {{0..10}}, got {v}")
        if self.upper[2] - self.lower[2] <= 0:
            raise ValueError("id_exchanges bounds must differ")

    def benefit_form(self) -> Tuple[np.ndarray, np.ndarray]:
        """Bounds with the exchange count turned into a benefit column."""
        upper = np.array(self.upper)
        lower = np.array(self.lower)
        k_hi, k_lo = upper[2], lower[2]
        upper[2] = k_hi - k_lo
        lower[2] = 0.0
        return upper, lower


@dataclass(frozen=True)
class AttributeVector:
    bandwidth: float
    time_on_network: float
    id_exchanges: int
    willingness: int

    def __post_init__(self):
        if self.bandwidth < 0 or self.time_on_network < 0:
            raise ValueError("bandwidth and time_on_network must be non-negative")
        if self.id_exchanges < 0:
            raise ValueError("id_exchanges must be non-negative")
        if not 0 <= self.willingness <= 10:
            raise ValueError(f"willingness must lie in 0..10, got {self.willingness}")

    def replace(self, **changes) -> "AttributeVector":
        data = dict(self.__dict__)
        data.update(changes)
        return AttributeVector(**data)


def decision_matrix(candidates: Sequence[AttributeVector], bounds: CriteriaBounds) -> np.ndarray:
    """N x 4 benefit-oriented matrix, one row per candidate."""
    if not candidates:
        raise ValueError("decision matrix needs at least one candidate")
    raw = [(c.bandwidth, c.time_on_network, c.id_exchanges, c.willingness) for c in candidates]
    return benefit_matrix(np.array(raw, dtype=float), bounds)


def benefit_matrix(raw: np.ndarray, bounds: CriteriaBounds) -> np.ndarray:
    """Turn raw attribute rows into benefit form (exchange count becomes ``K+ - k``)."""
    D = np.array(raw, dtype=float)
    D[:, 2] = np.maximum(bounds.upper[2] - D[:, 2], 0.0)
    return D


def normalize(D: np.ndarray, zero_columns: str = "raise") -> np.ndarray:
    """Divide every column by its Euclidean norm.

    An all-zero column cannot be normalized. ``zero_columns="raise"`` reports
    it; ``"zero"`` leaves the column at zero, which makes the criterion neutral
    between candidates.
    """
    D = np.asarray(D, dtype=float)
    norms = np.sqrt((D * D).sum(axis=0))
    zero = norms == 0
    if zero.any():
        if zero_columns == "raise":
            names = [CRITERIA[j] for j in np.flatnonzero(zero)]
            raise NormalizationError(f"all-zero column(s): {', '.join(names)}")
        norms = np.where(zero, 1.0, norms)
    return D / norms


def closeness(D: np.ndarray, weights: CriteriaWeights, bounds: CriteriaBounds,
              weighted: bool = True, zero_columns: str = "raise") -> np.ndarray:
    """Closeness of each row of ``D`` to the upper bound, in [0, 1]."""
    A = normalize(D, zero_columns)
    upper, lower = bounds.benefit_form()
    lower_hat = lower / upper
    if weighted:
        w = weights.as_array()
        V = A * w
        ideal = w
        anti = w * lower_hat
    else:
        V = A
        ideal = np.ones(4)
        anti = lower_hat
    e_plus = np.sqrt(((V - ideal) ** 2).sum(axis=1))
    e_minus = np.sqrt(((V - anti) ** 2).sum(axis=1))
    total = e_plus + e_minus
    degenerate = total == 0
    if degenerate.any():
        warnings.warn("candidate coincides with both bounds; closeness set to 1",
                      DegenerateBoundsWarning, stacklevel=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        C = np.where(degenerate, 1.0, e_minus / np.where(degenerate, 1.0, total))
    return C


def score(candidates: Sequence[AttributeVector], weights: CriteriaWeights,
          bounds: CriteriaBounds, weighted: bool = True,
          zero_columns: str = "raise") -> np.ndarray:
    return closeness(decision_matrix(candidates, bounds), weights, bounds, weighted, zero_columns)


def rank(C: Sequence[float], ids: Optional[Sequence[int]] = None) -> list:
    """Candidate indices by descending closeness; ties go to the lower ID."""
    keys = list(range(len(C))) if ids is None else list(ids)
    return sorted(range(len(C)), key=lambda i: (-float(C[i]), keys[i]))
