"""Cluster-based peer-to-peer overlay with TOPSIS-ranked super-nodes."""
from .address_space import ActivationMap, ModeError, NetworkGeometry, RangeError
from .protocol import MessageKind, Network, Role
from .selection import AttributeVector, CriteriaBounds, CriteriaWeights, closeness, rank, score
from .tables import SupremeOverlay, build_supreme_tables, next_hop

__all__ = [
    "ActivationMap", "ModeError", "NetworkGeometry", "RangeError",
    "MessageKind", "Network", "Role",
    "AttributeVector", "CriteriaBounds", "CriteriaWeights", "closeness", "rank", "score",
    "SupremeOverlay", "build_supreme_tables", "next_hop",
]
