"""Search tables, default routing tables and supreme-node routing tables."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .address_space import (
    ActivationMap,
    NetworkGeometry,
    cluster_head,
    cluster_of,
    clockwise_distance,
    head_of_cluster,
    ring_distance,
    section_head,
    section_of,
)


class DomainError(ValueError):
    """A table input refers to IDs outside the owner's cluster or role."""


class RoutingError(RuntimeError):
    """No table entry brings a message closer to its target."""


@dataclass(frozen=True)
class SearchTable:
    owner: int
    slots: Tuple[Optional[int], ...]

    def __len__(self):
        return len(self.slots)

    @property
    def occupied(self) -> List[int]:
        return [s for s in self.slots if s is not None]

    def contains(self, node_id: int) -> bool:
        k = node_id - self.owner - 1
        return 0 <= k < len(self.slots) and self.slots[k] is not None


def build_search_table(owner: int, members: Iterable[int], g: NetworkGeometry) -> SearchTable:
    if cluster_head(owner, g) != owner:
        raise DomainError(f"{owner} is not a cluster head")
    slots: List[Optional[int]] = [None] * (g.cluster_size - 1)
    for m in members:
        if m == owner or cluster_head(m, g) != owner:
            raise DomainError(f"member {m} is not in the cluster headed by {owner}")
        slots[m - owner - 1] = m
    return SearchTable(owner, tuple(slots))


@dataclass(frozen=True)
class RoutingEntry:
    head: int
    active: bool


@dataclass(frozen=True)
class RoutingTable:
    """All other cluster heads, clockwise from the owner's successor head."""

    owner: int
    entries: Tuple[RoutingEntry, ...]

    def __len__(self):
        return len(self.entries)

    def active_heads(self) -> List[int]:
        return [e.head for e in self.entries if e.active]

    def entry_for(self, head: int) -> Optional[RoutingEntry]:
        for e in self.entries:
            if e.head == head:
                return e
        return None


def build_default_routing_table(owner: int, activation: ActivationMap,
                                g: NetworkGeometry) -> RoutingTable:
    if cluster_head(owner, g) != owner:
        raise DomainError(f"{owner} is not a cluster head")
    first = cluster_of(owner, g)
    entries = []
    for k in range(1, g.cluster_count):
        idx = (first + k) % g.cluster_count
        entries.append(RoutingEntry(head_of_cluster(idx, g), activation.cluster_active(idx)))
    return RoutingTable(owner, tuple(entries))


def supreme_offsets(g: NetworkGeometry) -> List[int]:
    """Clockwise offsets (in IDs) of a supreme-node's routing table.

    Powers of two starting at the section size and staying below a quarter
    ring, the quarter ring itself, the quarter ring plus each such power while
    below half the ring, and finally half the ring.
    """
    s = g.section_exp
    if s is None:
        g._require_scalable()
    half = g.half
    if s >= g.ring_exp - 1:
        return [half]
    quarter = half // 2
    out = []
    step = 1 << s
    while step < quarter:
        out.append(step)
        step <<= 1
    out.append(quarter)
    step = 1 << s
    while quarter + step < half:
        out.append(quarter + step)
        step <<= 1
    out.append(half)
    return out


@dataclass(frozen=True)
class SupremeEntry:
    offset: int
    target: int
    hop: int

    @property
    def resolved(self) -> bool:
        return self.hop == self.target


@dataclass(frozen=True)
class SupremeTables:
    owner: int
    clockwise: Tuple[SupremeEntry, ...]
    counterclockwise: Tuple[SupremeEntry, ...]
    # nearest active section heads on either side; also consulted when routing
    successor: int
    predecessor: int

    def candidates(self) -> List[Tuple[int, int]]:
        """(hop, direction) pairs; direction 0 is clockwise, 1 counterclockwise."""
        out = [(e.hop, 0) for e in self.clockwise]
        out.append((self.successor, 0))
        out.extend((e.hop, 1) for e in self.counterclockwise)
        out.append((self.predecessor, 1))
        return out


def build_supreme_tables(owner: int, g: NetworkGeometry) -> SupremeTables:
    """Raw tables: every target assumed active."""
    if section_head(owner, g) != owner:
        raise DomainError(f"{owner} is not a section head")
    offs = supreme_offsets(g)
    cw = tuple(SupremeEntry(o, (owner + o) % g.size, (owner + o) % g.size) for o in offs)
    ccw = tuple(SupremeEntry(o, (owner - o) % g.size, (owner - o) % g.size) for o in offs)
    step = g.section_size
    return SupremeTables(owner, cw, ccw, (owner + step) % g.size, (owner - step) % g.size)


def _walk_to_active(start: int, toward: int, step: int, activation: ActivationMap,
                    g: NetworkGeometry) -> int:
    """First active section head from ``start`` moving by ``step`` until ``toward``."""
    h = start
    while h != toward:
        if activation.section_active(section_of(h, g)):
            return h
        h = (h + step) % g.size
    return toward


def resolve_fallbacks(t: SupremeTables, activation: ActivationMap,
                      g: NetworkGeometry) -> SupremeTables:
    """Replace inactive targets by the nearest active head on the owner's side.

    For the clockwise table that is the first active head counterclockwise
    from the target; the counterclockwise table mirrors it. When nothing
    between owner and target is active the entry points back at the owner.
    """
    step = g.section_size
    cw = tuple(
        SupremeEntry(e.offset, e.target, _walk_to_active(e.target, t.owner, -step, activation, g))
        for e in t.clockwise
    )
    ccw = tuple(
        SupremeEntry(e.offset, e.target, _walk_to_active(e.target, t.owner, step, activation, g))
        for e in t.counterclockwise
    )
    succ = _walk_to_active((t.owner + step) % g.size, t.owner, step, activation, g)
    pred = _walk_to_active((t.owner - step) % g.size, t.owner, -step, activation, g)
    return SupremeTables(t.owner, cw, ccw, succ, pred)


def fallback_head(target: int, activation: ActivationMap, g: NetworkGeometry) -> Optional[int]:
    """Section head standing in for ``target``'s section: itself or its nearest active predecessor."""
    if not activation.active_sections:
        return None
    h = section_head(target, g)
    for _ in range(g.section_count):
        if activation.section_active(section_of(h, g)):
            return h
        h = (h - g.section_size) % g.size
    return None


def next_hop(current: int, target: int, tables: SupremeTables, g: NetworkGeometry) -> int:
    """Greedy step toward ``target``'s section head.

    Picks the resolved entry (either table, or the active successor or
    predecessor) nearest to the target section head. Equal distances prefer
    the clockwise table, then the entry that has not passed the target.
    """
    dest = section_head(target, g)
    if dest == current:
        return current
    here = ring_distance(current, dest, g)
    best = None
    best_key = None
    for hop, direction in tables.candidates():
        if hop == current:
            continue
        key = (ring_distance(hop, dest, g), direction, clockwise_distance(hop, dest, g))
        if best_key is None or key < best_key:
            best, best_key = hop, key
    if best is None or best_key[0] >= here:
        raise RoutingError(f"no entry of {current} approaches {dest}")
    return best


class SupremeOverlay:
    """Resolved supreme tables for one activation snapshot, built lazily."""

    def __init__(self, g: NetworkGeometry, activation: ActivationMap):
        self.g = g
        self.activation = activation
        self._tables: Dict[int, SupremeTables] = {}

    def tables(self, owner: int) -> SupremeTables:
        t = self._tables.get(owner)
        if t is None:
            t = resolve_fallbacks(build_supreme_tables(owner, self.g), self.activation, self.g)
            self._tables[owner] = t
        return t

    def route(self, source: int, target: int) -> List[int]:
        """Section heads visited from ``source`` to the head serving ``target``.

        ``source`` must be an active section head. An inactive destination
        section is served by its nearest active predecessor.
        """
        g = self.g
        dest = fallback_head(target, self.activation, g)
        if dest is None:
            raise RoutingError("no active section")
        path = [source]
        cur = source
        limit = g.section_count
        while cur != dest:
            cur = next_hop(cur, dest, self.tables(cur), g)
            path.append(cur)
            if len(path) > limit + 1:
                raise RoutingError(f"route {source}->{dest} does not converge")
        return path
