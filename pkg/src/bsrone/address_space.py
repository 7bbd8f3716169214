"""Integer geometry of the identifier ring.

The ring holds ``2**ring_exp`` IDs, split into clusters of ``2**cluster_exp``
consecutive IDs. In scalable mode the ring is additionally split into sections
of ``2**section_exp`` IDs, each a whole number of clusters. Clockwise means
increasing ID modulo the ring size.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional


class RangeError(ValueError):
    """An ID lies outside ``[0, 2**ring_exp)``."""


class ModeError(RuntimeError):
    """A scalable-mode operation was used on a default-mode geometry."""


@dataclass(frozen=True)
class NetworkGeometry:
    ring_exp: int
    cluster_exp: int
    section_exp: Optional[int] = None

    def __post_init__(self):
        n, x, s = self.ring_exp, self.cluster_exp, self.section_exp
        if n < 1:
            raise ValueError(f"ring_exp must be >= 1, got {n}")
        if not 0 < x <= n:
            raise ValueError(f"cluster_exp must satisfy 0 < x <= n, got x={x}, n={n}")
        assert (1 << n) % (1 << x) == 0
        if s is not None and not x <= s <= n:
            raise ValueError(f"section_exp must satisfy x <= s <= n, got s={s}, x={x}, n={n}")

    @property
    def size(self) -> int:
        return 1 << self.ring_exp

    @property
    def half(self) -> int:
        """Half the ring, the reach of one directional supreme table."""
        return 1 << (self.ring_exp - 1)

    @property
    def cluster_size(self) -> int:
        return 1 << self.cluster_exp

    @property
    def cluster_count(self) -> int:
        return 1 << (self.ring_exp - self.cluster_exp)

    @property
    def scalable(self) -> bool:
        return self.section_exp is not None

    @property
    def section_size(self) -> int:
        self._require_scalable()
        return 1 << self.section_exp

    @property
    def section_count(self) -> int:
        self._require_scalable()
        return 1 << (self.ring_exp - self.section_exp)

    @property
    def clusters_per_section(self) -> int:
        self._require_scalable()
        return 1 << (self.section_exp - self.cluster_exp)

    def _require_scalable(self):
        if self.section_exp is None:
            raise ModeError("operation requires scalable mode (section_exp unset)")

    def check(self, node_id: int) -> int:
        if not 0 <= node_id < self.size:
            raise RangeError(f"ID {node_id} outside [0, {self.size})")
        return node_id

    def describe(self) -> dict:
        return {
            "ring_exp": self.ring_exp,
            "cluster_exp": self.cluster_exp,
            "section_exp": self.section_exp,
        }


def cluster_of(node_id: int, g: NetworkGeometry) -> int:
    return g.check(node_id) >> g.cluster_exp


def cluster_head(node_id: int, g: NetworkGeometry) -> int:
    return cluster_of(node_id, g) << g.cluster_exp


def head_of_cluster(index: int, g: NetworkGeometry) -> int:
    if not 0 <= index < g.cluster_count:
        raise RangeError(f"cluster index {index} outside [0, {g.cluster_count})")
    return index << g.cluster_exp


def cluster_heads(g: NetworkGeometry) -> List[int]:
    return list(range(0, g.size, g.cluster_size))


def cluster_ids(index: int, g: NetworkGeometry) -> range:
    """All IDs of cluster ``index`` in clockwise order, head first."""
    head = head_of_cluster(index, g)
    return range(head, head + g.cluster_size)


def section_of(node_id: int, g: NetworkGeometry) -> int:
    g._require_scalable()
    return g.check(node_id) >> g.section_exp


def section_head(node_id: int, g: NetworkGeometry) -> int:
    return section_of(node_id, g) << g.section_exp


def section_heads(g: NetworkGeometry) -> List[int]:
    return list(range(0, g.size, g.section_size))


def clockwise_distance(a: int, b: int, g: NetworkGeometry) -> int:
    """Steps needed to walk clockwise from ``a`` to ``b``."""
    return (b - a) % g.size


def ring_distance(a: int, b: int, g: NetworkGeometry) -> int:
    d = (b - a) % g.size
    return min(d, g.size - d)


@dataclass(frozen=True)
class ActivationMap:
    """Which clusters and sections currently have a serving head."""

    active_clusters: FrozenSet[int] = field(default_factory=frozenset)
    active_sections: FrozenSet[int] = field(default_factory=frozenset)

    @classmethod
    def from_heads(cls, heads: Iterable[int], g: NetworkGeometry) -> "ActivationMap":
        """Build from occupied head positions (cluster and section heads)."""
        heads = list(heads)
        clusters = frozenset(cluster_of(h, g) for h in heads if h % g.cluster_size == 0)
        sections: FrozenSet[int] = frozenset()
        if g.scalable:
            sections = frozenset(section_of(h, g) for h in heads if h % g.section_size == 0)
        return cls(clusters, sections)

    @classmethod
    def full(cls, g: NetworkGeometry) -> "ActivationMap":
        sections = frozenset(range(g.section_count)) if g.scalable else frozenset()
        return cls(frozenset(range(g.cluster_count)), sections)

    def cluster_active(self, index: int) -> bool:
        return index in self.active_clusters

    def section_active(self, index: int) -> bool:
        return index in self.active_sections
