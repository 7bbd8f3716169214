"""Node lifecycle: joins, ID exchanges, departures, elections and lookups.

Every present node has a real ID (where its data lives) and a position (the
overlay ID it currently answers to). Positions are a permutation of real IDs:
an ID exchange swaps the positions of two nodes, and a node that activates a
cluster without owning the cluster's first ID swaps with the absent owner of
that ID. A node whose position differs from its real ID holds a symlink.
Requests for ID ``t`` reach the occupant of position ``t``; if that is not
real node ``t``, one forwarding step delivers them to wherever ``t`` sits.

A cluster is active exactly when its head position (its first ID) is
occupied; the occupant is the cluster's super-node.
"""
from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .address_space import (
    ActivationMap,
    NetworkGeometry,
    section_head,
    section_of,
)
from .selection import (
    AttributeVector,
    CriteriaBounds,
    CriteriaWeights,
    benefit_matrix,
    closeness,
    rank,
)
from .tables import (
    RoutingTable,
    SearchTable,
    SupremeOverlay,
    SupremeTables,
    build_default_routing_table,
    build_search_table,
)

log = logging.getLogger(__name__)

DEFAULT_WEIGHTS = CriteriaWeights(0.4, 0.3, 0.1, 0.2)
DEFAULT_BOUNDS = CriteriaBounds(upper=(100.0, 7200.0, 20.0, 10.0), lower=(1.0, 60.0, 0.0, 0.0))


class JoinRejected(Exception):
    pass


class ProtocolViolation(Exception):
    pass


class Role(str, Enum):
    REGULAR = "regular"
    SUPER = "super"
    SUPREME = "supreme"
    SUBSTITUTE = "substitute"


class MessageKind(str, Enum):
    JOIN_REQUEST = "JoinRequest"
    JOIN_ACCEPT = "JoinAccept"
    ID_EXCHANGE = "IdExchange"
    SUPER_NODE_UPDATE = "SuperNodeUpdate"
    REPLACEMENT_QUERY = "ReplacementQuery"
    REPLACEMENT_ANSWER = "ReplacementAnswer"
    SUBSTITUTE_SYNC = "SubstituteSync"
    SUBSTITUTE_PROMOTION = "SubstitutePromotion"
    LOOKUP_REQUEST = "LookupRequest"
    LOOKUP_REPLY = "LookupReply"


# messages fanned out to every other head
BROADCAST_KINDS = (MessageKind.SUPER_NODE_UPDATE, MessageKind.SUBSTITUTE_PROMOTION)


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    src: int
    dst: int
    payload: tuple = ()

    def as_tuple(self):
        return (self.kind.value, self.src, self.dst, self.payload)


class SignalCounter:
    """Messages emitted, keyed by (phase, kind). Counts only ever grow."""

    def __init__(self):
        self._counts: Counter = Counter()
        self.phase = "default"

    def add(self, kind: MessageKind, n: int = 1):
        if n < 0:
            raise ValueError("signal counts are monotone")
        if n:
            self._counts[(self.phase, kind)] += n

    def count(self, kind: Optional[MessageKind] = None, phase: Optional[str] = None) -> int:
        return sum(v for (p, k), v in self._counts.items()
                   if (kind is None or k == kind) and (phase is None or p == phase))

    def total(self, kinds: Optional[Sequence[MessageKind]] = None, phase: Optional[str] = None) -> int:
        if kinds is None:
            return self.count(phase=phase)
        return sum(self.count(k, phase) for k in kinds)

    def snapshot(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for (_, k), v in self._counts.items():
            out[k.value] = out.get(k.value, 0) + v
        return out

    def by_phase(self) -> Dict[str, Dict[str, int]]:
        out: Dict[str, Dict[str, int]] = {}
        for (p, k), v in self._counts.items():
            out.setdefault(p, {})[k.value] = v
        return out


@dataclass
class NodeRecord:
    real_id: int
    attrs: AttributeVector
    joined_at: float
    position: int
    role: Role = Role.REGULAR

    @property
    def symlink_id(self) -> Optional[int]:
        return None if self.position == self.real_id else self.position


@dataclass
class LookupResult:
    found: bool
    hops: int
    section_hops: int = 0
    forwards: int = 0
    path: List[int] = field(default_factory=list)
    holder: Optional[int] = None


class Network:
    """Overlay state owned by one event loop.

    ``scheduler(delay, callback)`` defers election completion when
    ``election_hop_latency`` is positive; otherwise elections finish inside
    the departure that triggered them.
    """

    def __init__(self, geometry: NetworkGeometry,
                 weights: CriteriaWeights = DEFAULT_WEIGHTS,
                 bounds: CriteriaBounds = DEFAULT_BOUNDS, *,
                 backup_count: int = 1,
                 supreme_backup_count: int = 1,
                 weighted: bool = True,
                 rng: Optional[random.Random] = None,
                 record_messages: bool = False,
                 record_trace: bool = False,
                 session_clock: bool = False,
                 election_hop_latency: float = 0.0,
                 scheduler: Optional[Callable[[float, Callable[[], None]], None]] = None):
        if backup_count < 0 or supreme_backup_count < 1:
            raise ValueError("backup_count >= 0 and supreme_backup_count >= 1 required")
        if election_hop_latency > 0 and scheduler is None:
            raise ValueError("deferred elections need a scheduler")
        self.g = geometry
        self.weights = weights
        self.bounds = bounds
        self.backup_count = backup_count
        self.supreme_backup_count = supreme_backup_count
        self.weighted = weighted
        self.rng = rng if rng is not None else random.Random(0)
        self.session_clock = session_clock
        self.election_hop_latency = election_hop_latency
        self.scheduler = scheduler
        self.now = 0.0

        self.nodes: Dict[int, NodeRecord] = {}
        self._perm: Dict[int, int] = {}   # real -> position, identity omitted
        self._inv: Dict[int, int] = {}    # position -> real, identity omitted
        self._occ: Dict[int, int] = {}    # occupied position -> real
        self._cluster_occ: Dict[int, set] = {}
        self._active: set = set()
        self._subs: Dict[int, List[int]] = {}
        self._sub_total = 0
        self._sub_scores: Dict[int, float] = {}  # cluster -> closeness of first substitute
        self._pending: Dict[int, int] = {}  # cluster -> election generation
        self._generation = 0
        self._activation_version = 0
        self._announced_version = 0

        self.counter = SignalCounter()
        self.messages: Optional[List[Message]] = [] if record_messages else None
        self.trace: Optional[List[dict]] = [] if record_trace else None
        self.exchanges = 0
        self.failures: List[Tuple[float, int]] = []

    # ------------------------------------------------------------------ views

    def __contains__(self, real: int) -> bool:
        return real in self.nodes

    def __len__(self):
        return len(self.nodes)

    def present(self) -> List[int]:
        return sorted(self.nodes)

    def position_of(self, real: int) -> int:
        return self._perm.get(real, real)

    def holder_of(self, position: int) -> Optional[int]:
        return self._occ.get(position)

    def _real_at(self, position: int) -> int:
        return self._inv.get(position, position)

    def head_position(self, cluster: int) -> int:
        return cluster << self.g.cluster_exp

    def head_of(self, cluster: int) -> Optional[int]:
        """Real ID of the node serving as head of ``cluster``."""
        return self._occ.get(cluster << self.g.cluster_exp)

    def active_clusters(self) -> List[int]:
        return sorted(self._active)

    def active_head_positions(self) -> List[int]:
        x = self.g.cluster_exp
        return [c << x for c in sorted(self._active)]

    def activation(self) -> ActivationMap:
        return ActivationMap.from_heads(self.active_head_positions(), self.g)

    def members(self, cluster: int) -> List[int]:
        """Real IDs occupying non-head positions of ``cluster``."""
        hp = cluster << self.g.cluster_exp
        return sorted(self._occ[p] for p in self._cluster_occ.get(cluster, ()) if p != hp)

    def substitutes(self, cluster: int) -> List[int]:
        return list(self._subs.get(cluster, ()))

    def election_pending(self, cluster: int) -> bool:
        return cluster in self._pending

    def search_table(self, head_pos: int) -> SearchTable:
        c = head_pos >> self.g.cluster_exp
        occupied = [p for p in self._cluster_occ.get(c, ()) if p != head_pos]
        return build_search_table(head_pos, occupied, self.g)

    def routing_table(self, head_pos: int) -> RoutingTable:
        return build_default_routing_table(head_pos, self.activation(), self.g)

    def supreme_tables(self, section_head_pos: int) -> SupremeTables:
        return SupremeOverlay(self.g, self.activation()).tables(section_head_pos)

    def current_attrs(self, real: int) -> AttributeVector:
        node = self.nodes[real]
        if not self.session_clock:
            return node.attrs
        return node.attrs.replace(
            time_on_network=node.attrs.time_on_network + max(self.now - node.joined_at, 0.0))

    def scores(self, reals: Sequence[int]) -> np.ndarray:
        """Closeness of ``reals`` scored against each other."""
        now, clock = self.now, self.session_clock
        raw = []
        for r in reals:
            node = self.nodes[r]
            a = node.attrs
            t = a.time_on_network + (max(now - node.joined_at, 0.0) if clock else 0.0)
            raw.append((a.bandwidth, t, a.id_exchanges, a.willingness))
        D = benefit_matrix(np.array(raw, dtype=float), self.bounds)
        return closeness(D, self.weights, self.bounds, self.weighted, zero_columns="zero")

    # ------------------------------------------------------- low-level state

    def _set_occ(self, position: int, real: int):
        self._occ[position] = real
        c = position >> self.g.cluster_exp
        self._cluster_occ.setdefault(c, set()).add(position)
        if position == c << self.g.cluster_exp and c not in self._active:
            self._active.add(c)
            self._activation_version += 1

    def _clear_occ(self, position: int):
        del self._occ[position]
        c = position >> self.g.cluster_exp
        members = self._cluster_occ[c]
        members.discard(position)
        if not members:
            del self._cluster_occ[c]
        if position == c << self.g.cluster_exp and c in self._active:
            self._active.discard(c)
            self._activation_version += 1

    def _swap(self, a: int, b: int):
        """Exchange the positions of reals ``a`` and ``b`` (either may be absent)."""
        pa, pb = self.position_of(a), self.position_of(b)
        a_in, b_in = a in self.nodes, b in self.nodes
        if a_in:
            self._clear_occ(pa)
        if b_in:
            self._clear_occ(pb)
        for real, pos in ((a, pb), (b, pa)):
            if real == pos:
                self._perm.pop(real, None)
                self._inv.pop(pos, None)
            else:
                self._perm[real] = pos
                self._inv[pos] = real
        if a_in:
            self._set_occ(pb, a)
            self.nodes[a].position = pb
        if b_in:
            self._set_occ(pa, b)
            self.nodes[b].position = pa

    def _send(self, kind: MessageKind, src: int, dst: int, payload: tuple = ()):
        self.counter.add(kind)
        if self.messages is not None:
            self.messages.append(Message(kind, src, dst, payload))

    def _recipients(self, src_pos: int) -> List[int]:
        g = self.g
        heads = self.active_head_positions()
        if not g.scalable:
            return [h for h in heads if h != src_pos]
        sec = section_head(src_pos, g)
        out = [h for h in heads if h != src_pos and
               (section_head(h, g) == sec or (src_pos == sec and h % g.section_size == 0))]
        return out

    def _broadcast(self, kind: MessageKind, src_pos: int, payload: tuple = ()):
        """Fan ``kind`` out to the other heads; each recipient syncs its substitutes."""
        if self.g.scalable or self.messages is not None:
            recipients = self._recipients(src_pos)
            n = len(recipients)
            syncs = sum(len(self._subs.get(h >> self.g.cluster_exp, ())) for h in recipients)
        else:
            n = len(self._active) - (1 if (src_pos >> self.g.cluster_exp) in self._active else 0)
            syncs = self._sub_total - len(self._subs.get(src_pos >> self.g.cluster_exp, ()))
            recipients = None
        self.counter.add(kind, n)
        self.counter.add(MessageKind.SUBSTITUTE_SYNC, syncs)
        if self.messages is not None:
            for h in recipients:
                self.messages.append(Message(kind, src_pos, h, payload))
            for h in recipients:
                for s in self._subs.get(h >> self.g.cluster_exp, ()):
                    self.messages.append(Message(MessageKind.SUBSTITUTE_SYNC, h, self.position_of(s)))
        self._announced_version = self._activation_version

    def _sync_substitutes(self, cluster: int):
        """The head's tables changed: push them to every ready substitute."""
        subs = self._subs.get(cluster, ())
        if subs:
            hp = cluster << self.g.cluster_exp
            for s in subs:
                self._send(MessageKind.SUBSTITUTE_SYNC, hp, self.position_of(s))

    def _set_subs(self, cluster: int, subs: List[int]):
        old = self._subs.get(cluster, [])
        self._sub_total += len(subs) - len(old)
        for r in old:
            if r in self.nodes and self.nodes[r].role == Role.SUBSTITUTE:
                self.nodes[r].role = Role.REGULAR
        if subs:
            self._subs[cluster] = subs
        else:
            self._subs.pop(cluster, None)
        hp = cluster << self.g.cluster_exp
        for r in subs:
            self.nodes[r].role = Role.SUBSTITUTE
            if r not in old:
                self._send(MessageKind.SUBSTITUTE_SYNC, hp, self.position_of(r))

    def _backups_for(self, cluster: int) -> int:
        hp = cluster << self.g.cluster_exp
        if self.g.scalable and hp % self.g.section_size == 0:
            return max(self.backup_count, self.supreme_backup_count)
        return self.backup_count

    def _refresh_subs(self, cluster: int):
        """Choose the cluster's highest-closeness members as substitutes.

        While an election for the cluster is under way only departed backups
        are dropped; the set is refilled once the election settles.
        """
        if cluster not in self._active:
            if cluster in self._subs:
                self._set_subs(cluster, [])
            return
        members = self.members(cluster)
        current = [r for r in self._subs.get(cluster, ()) if r in self.nodes
                   and self.position_of(r) >> self.g.cluster_exp == cluster
                   and self.position_of(r) != cluster << self.g.cluster_exp]
        if cluster in self._pending:
            if current != self._subs.get(cluster, []):
                self._set_subs(cluster, current)
            return
        k = self._backups_for(cluster)
        if not members or k == 0:
            chosen: List[int] = []
        else:
            C = self.scores(members)
            order = rank(C, members)[:k]
            chosen = [members[i] for i in order]
            self._sub_scores[cluster] = float(C[order[0]])
        if chosen != self._subs.get(cluster, []):
            self._set_subs(cluster, chosen)

    def _set_head_role(self, real: int):
        node = self.nodes[real]
        pos = node.position
        if self.g.scalable and pos % self.g.section_size == 0:
            node.role = Role.SUPREME
        else:
            node.role = Role.SUPER

    def _demote(self, real: int):
        if real in self.nodes:
            self.nodes[real].role = Role.REGULAR

    def _record(self, event: str, actor: int, before: Dict[str, int], **extra):
        if self.trace is None:
            return
        after = self.counter.snapshot()
        delta = {k: after[k] - before.get(k, 0) for k in sorted(after) if after[k] != before.get(k, 0)}
        rec = {"t": self.now, "event": event, "actor": actor, "signals": delta}
        rec.update(extra)
        self.trace.append(rec)

    def _trace_start(self) -> Dict[str, int]:
        return self.counter.snapshot() if self.trace is not None else {}

    # ---------------------------------------------------------------- joins

    def _contact(self) -> Optional[int]:
        heads = self.active_head_positions()
        if not heads:
            return None
        return heads[self.rng.randrange(len(heads))]

    def _weakest_head(self, candidate: int) -> Tuple[Optional[int], bool]:
        """Weakest current head and whether ``candidate`` outranks it."""
        heads = [self._occ[h] for h in self.active_head_positions()]
        heads = [h for h in heads if h != candidate]
        if not heads:
            return None, False
        pool = heads + [candidate]
        C = self.scores(pool)
        positions = [self.position_of(r) for r in pool]
        order = [i for i in rank(C, positions) if i < len(heads)]
        weakest = order[-1]
        return heads[weakest], bool(C[-1] > C[weakest])

    def handle_join(self, newcomer: int, attrs: AttributeVector,
                    contact: Optional[int] = None) -> str:
        """Admit ``newcomer``; returns how it entered.

        Outcomes: ``"activated"`` (opened an inactive cluster or section),
        ``"exchanged"`` (swapped IDs with the weakest head), ``"takeover"``
        (reclaimed its own head ID from a symlink holder) or ``"member"``.
        """
        g = self.g
        g.check(newcomer)
        if newcomer in self.nodes:
            raise JoinRejected(f"ID {newcomer} already present")
        p = self.position_of(newcomer)
        if p in self._occ:
            raise JoinRejected(f"position {p} for {newcomer} is occupied")
        before = self._trace_start()
        if contact is None:
            contact = self._contact()
        if contact is not None:
            self._send(MessageKind.JOIN_REQUEST, p, contact)
        c = p >> g.cluster_exp
        hp = c << g.cluster_exp
        target = None
        if g.scalable and (section_head(p, g) not in self._occ):
            target = section_head(p, g)
        elif hp not in self._occ:
            target = hp

        if target is not None:
            if target != p:
                # newcomer is not registered yet, so this only relabels IDs
                self._swap(newcomer, self._real_at(target))
            self.nodes[newcomer] = NodeRecord(newcomer, attrs, self.now, target)
            self._set_occ(target, newcomer)
            self._set_head_role(newcomer)
            if contact is not None:
                self._send(MessageKind.JOIN_ACCEPT, contact, target)
            self._broadcast(MessageKind.SUPER_NODE_UPDATE, target, ("activate", target))
            self._refresh_subs(target >> g.cluster_exp)
            outcome = "activated"
        else:
            self.nodes[newcomer] = NodeRecord(newcomer, attrs, self.now, p)
            self._set_occ(p, newcomer)
            weakest, beats = self._weakest_head(newcomer)
            if beats:
                hw = self.position_of(weakest)
                if hw == newcomer:
                    self._swap(newcomer, weakest)
                    self._set_head_role(newcomer)
                    self._demote(weakest)
                    self._broadcast(MessageKind.SUPER_NODE_UPDATE, hw, ("takeover", hw))
                    outcome = "takeover"
                else:
                    self._exchange(newcomer, weakest)
                    outcome = "exchanged"
                # the displaced head settles at the newcomer's former position
                self._send(MessageKind.JOIN_ACCEPT, self.head_position(c), p)
                self._sync_substitutes(c)
                self._refresh_subs(c)
                self._refresh_subs(hw >> g.cluster_exp)
            else:
                self._send(MessageKind.JOIN_ACCEPT, hp, p)
                self._sync_substitutes(c)
                self._refresh_subs(c)
                outcome = "member"
        self._record("join", newcomer, before, outcome=outcome, attrs=list(attrs.__dict__.values()))
        return outcome

    def bootstrap(self, population: Dict[int, AttributeVector]):
        """Place an initial population without running the join protocol.

        Every node sits at its own ID. An empty section or cluster head ID is
        taken (through a symlink) by the best-scoring node it would serve.
        Messages of this phase are counted under ``"bootstrap"``.
        """
        if self.nodes:
            raise ProtocolViolation("bootstrap needs an empty network")
        g = self.g
        phase = self.counter.phase
        self.counter.phase = "bootstrap"
        for real in sorted(population):
            g.check(real)
            self.nodes[real] = NodeRecord(real, population[real], self.now, real)
            self._set_occ(real, real)

        def promote(group: List[int], head: int):
            if head in self._occ or not group:
                return
            C = self.scores(group)
            best = group[rank(C, group)[0]]
            self._swap(best, self._real_at(head))

        if g.scalable:
            for sh in range(0, g.size, g.section_size):
                promote([self._occ[p] for p in sorted(self._occ) if sh <= p < sh + g.section_size], sh)
        for c in sorted(self._cluster_occ):
            promote([self._occ[p] for p in sorted(self._cluster_occ[c])], c << g.cluster_exp)
        for c in sorted(self._active):
            self._set_head_role(self._occ[c << g.cluster_exp])
            self._refresh_subs(c)
        self._announced_version = self._activation_version
        self.counter.phase = phase

    # ------------------------------------------------------------- exchange

    def _exchange(self, a: int, b: int):
        """Swap IDs of ``a`` and ``b``; exactly one of them is a head."""
        pa, pb = self.position_of(a), self.position_of(b)
        head_a = pa % self.g.cluster_size == 0
        head_b = pb % self.g.cluster_size == 0
        if head_a == head_b:
            raise ProtocolViolation(f"exchange needs exactly one head: {a}@{pa}, {b}@{pb}")
        head_pos, other_pos = (pa, pb) if head_a else (pb, pa)
        self._send(MessageKind.ID_EXCHANGE, head_pos, other_pos)
        self._swap(a, b)
        for r in (a, b):
            n = self.nodes[r]
            n.attrs = n.attrs.replace(id_exchanges=n.attrs.id_exchanges + 1)
        new_head = self._occ[head_pos]
        # a promoted backup stops shadowing its old head before anyone syncs
        oc = other_pos >> self.g.cluster_exp
        subs = self._subs.get(oc)
        if subs and new_head in subs:
            self._set_subs(oc, [r for r in subs if r != new_head])
        self._set_head_role(new_head)
        self._demote(self._occ[other_pos])
        self.exchanges += 1
        self._broadcast(MessageKind.SUPER_NODE_UPDATE, head_pos, ("exchange", head_pos))

    def id_exchange(self, a: int, b: int):
        """Swap the IDs of a head and a non-head; the non-head takes head duties.

        Both exchange counters increase by one and every other head is told.
        Requests for either ID then reach the data holder with at most one
        forwarding step.
        """
        for r in (a, b):
            if r not in self.nodes:
                raise ProtocolViolation(f"{r} is not present")
        before = self._trace_start()
        pa, pb = self.position_of(a), self.position_of(b)
        self._exchange(a, b)
        for p in {pa >> self.g.cluster_exp, pb >> self.g.cluster_exp}:
            self._refresh_subs(p)
        self._record("exchange", a, before, other=b)

    # --------------------------------------------------------------- leaves

    def handle_leave(self, departing: int) -> str:
        """Remove ``departing``; returns ``"member"``, ``"head"`` or ``"absent"``."""
        if departing not in self.nodes:
            log.warning("leave of unknown node %s ignored", departing)
            return "absent"
        before = self._trace_start()
        g = self.g
        pos = self.position_of(departing)
        c = pos >> g.cluster_exp
        hp = c << g.cluster_exp
        self._clear_occ(pos)
        del self.nodes[departing]
        subs = self._subs.get(c, [])
        if departing in subs:
            self._set_subs(c, [r for r in subs if r != departing])
        if pos != hp:
            self._sync_substitutes(c)
            self._refresh_subs(c)
            outcome = "member"
        else:
            self._fill_head(c, departing)
            outcome = "head"
        self._record("leave", departing, before, outcome=outcome)
        return outcome

    def _fill_head(self, cluster: int, departed: int):
        """The head of ``cluster`` is gone; hand its position on."""
        g = self.g
        hp = cluster << g.cluster_exp
        ready = [r for r in self._subs.get(cluster, ()) if r in self.nodes]
        members = self.members(cluster)
        if ready:
            sub = ready[0]
            self._set_subs(cluster, ready[1:])
            self._swap(sub, self._real_at(hp))
            self._set_head_role(sub)
            self._broadcast(MessageKind.SUBSTITUTE_PROMOTION, hp, ("promote", hp))
            self._start_election(cluster, departed)
            return
        self._pending.pop(cluster, None)
        if members:
            # connectivity lost until a member re-activates the cluster
            self.failures.append((self.now, cluster))
            C = self.scores(members)
            best = members[rank(C, members)[0]]
            self._swap(best, self._real_at(hp))
            self._set_head_role(best)
            self._broadcast(MessageKind.SUPER_NODE_UPDATE, hp, ("recover", hp))
            self._refresh_subs(cluster)
            return
        self._set_subs(cluster, [])
        if g.scalable and hp % g.section_size == 0:
            if self._refill_section_head(hp):
                return
        self._broadcast(MessageKind.SUPER_NODE_UPDATE, hp, ("deactivate", hp))

    def _refill_section_head(self, shp: int) -> bool:
        """Move the best remaining head of the section to its first ID."""
        g = self.g
        sec = section_of(shp, g)
        heads = [h for h in self.active_head_positions()
                 if section_of(h, g) == sec and h != shp]
        if not heads:
            return False
        reals = [self._occ[h] for h in heads]
        C = self.scores(reals)
        best = reals[rank(C, heads)[0]]
        old_pos = self.position_of(best)
        self._swap(best, self._real_at(shp))
        self._set_head_role(best)
        self._broadcast(MessageKind.SUPER_NODE_UPDATE, shp, ("supreme", shp))
        self._refresh_subs(shp >> g.cluster_exp)
        self._fill_head(old_pos >> g.cluster_exp, best)
        return True

    def _election_ring(self, head_pos: int) -> List[int]:
        """Active heads clockwise from the successor of ``head_pos``."""
        heads = self.active_head_positions()
        later = [h for h in heads if h > head_pos]
        earlier = [h for h in heads if h < head_pos]
        return later + earlier

    def _start_election(self, cluster: int, departed: int):
        hp = cluster << self.g.cluster_exp
        ring = self._election_ring(hp)
        self._generation += 1
        gen = self._generation
        self._pending[cluster] = gen
        if self.election_hop_latency > 0:
            delay = (len(ring) + 1) * self.election_hop_latency
            self.scheduler(delay, lambda: self._finish_election(cluster, gen, departed))
        else:
            self._finish_election(cluster, gen, departed)

    def _finish_election(self, cluster: int, gen: int, departed: int):
        if self._pending.get(cluster) != gen:
            return
        hp = cluster << self.g.cluster_exp
        holder = self._occ.get(hp)
        if holder is None:
            self._pending.pop(cluster, None)
            return
        offers = []
        prev = hp
        ring = self._election_ring(hp)
        x = self.g.cluster_exp
        if self.messages is None:
            # same traffic, counted in bulk
            for h in ring:
                subs = self._subs.get(h >> x)
                if subs and (h >> x) in self._sub_scores:
                    offers.append((h, subs[0], self._sub_scores[h >> x]))
            self.counter.add(MessageKind.REPLACEMENT_QUERY, len(ring))
            if ring:
                prev = ring[-1]
        else:
            for h in ring:
                best = self._best_member(h >> x, substitutes_only=True)
                self._send(MessageKind.REPLACEMENT_QUERY, prev, h, (departed,) + tuple(offers))
                if best:
                    offers.append((h,) + best)
                prev = h
        if prev != hp:
            self._send(MessageKind.REPLACEMENT_ANSWER, prev, hp, tuple(offers))
        del self._pending[cluster]
        winner = holder
        if offers:
            pool = [holder] + [o[1] for o in offers]
            C = self.scores(pool)
            top = rank(C, [self.position_of(r) for r in pool])[0]
            if top != 0 and C[top] > C[0]:
                winner = pool[top]
        if winner != holder:
            wc = self.position_of(winner) >> self.g.cluster_exp
            self._exchange(holder, winner)
            self._sync_substitutes(wc)
            self._refresh_subs(wc)
        else:
            self._broadcast(MessageKind.SUPER_NODE_UPDATE, hp, ("settled", hp))
        self._refresh_subs(cluster)

    def _best_member(self, cluster: int,
                     substitutes_only: bool = False) -> Optional[Tuple[int, float]]:
        """(real, closeness within its cluster) of the cluster's strongest spare member."""
        subs = self._subs.get(cluster)
        if subs and cluster in self._sub_scores:
            return subs[0], self._sub_scores[cluster]
        if substitutes_only:
            return None
        members = self.members(cluster)
        if not members:
            return None
        C = self.scores(members)
        i = rank(C, members)[0]
        return members[i], float(C[i])

    # ---------------------------------------------------------- maintenance

    def maintain_substitute(self, head_pos: int) -> List[int]:
        self._refresh_subs(head_pos >> self.g.cluster_exp)
        return self.substitutes(head_pos >> self.g.cluster_exp)

    def promote_on_improvement(self, node: int, new_attrs: AttributeVector) -> bool:
        """Report fresh attributes for a regular member; True if it was promoted."""
        rec = self.nodes.get(node)
        if rec is None:
            raise ProtocolViolation(f"{node} is not present")
        if rec.position % self.g.cluster_size == 0:
            raise ProtocolViolation(f"{node} is a head")
        if new_attrs == rec.attrs:
            return False
        before = self._trace_start()
        rec.attrs = new_attrs
        promoted = self._try_promote(node)
        if not promoted:
            self._refresh_subs(rec.position >> self.g.cluster_exp)
        self._record("improve", node, before, promoted=promoted,
                     attrs=list(new_attrs.__dict__.values()))
        return promoted

    def _try_promote(self, node: int) -> bool:
        weakest, beats = self._weakest_head(node)
        if not beats:
            return False
        c = self.position_of(node) >> self.g.cluster_exp
        wc = self.position_of(weakest) >> self.g.cluster_exp
        self._exchange(node, weakest)
        self._sync_substitutes(c)
        for cl in sorted({c, wc}):
            self._refresh_subs(cl)
        return True

    def refresh_attributes(self) -> int:
        """Periodic attribute round: each head checks its best member. Returns promotions."""
        before = self._trace_start()
        promoted = 0
        for c in self.active_clusters():
            if c in self._pending or c not in self._active:
                continue
            best = self._best_member(c)
            if best and self._try_promote(best[0]):
                promoted += 1
        self._record("refresh", -1, before, promoted=promoted)
        return promoted

    # --------------------------------------------------------------- lookup

    def lookup(self, origin: int, target: int) -> LookupResult:
        """Resolve ID ``target`` starting from present node ``origin``.

        Hops count head-to-head transfers; ``forwards`` is the extra step
        taken when the target ID is held by a symlink.
        """
        g = self.g
        if origin not in self.nodes:
            raise ProtocolViolation(f"origin {origin} is not present")
        g.check(target)
        start_head = self.head_position(self.position_of(origin) >> g.cluster_exp)
        dest_head = self.head_position(target >> g.cluster_exp)
        if dest_head not in self._occ and target in self.nodes:
            # exchanges are announced to every head, so the ID's current
            # cluster is known even when its native cluster has emptied
            dest_head = self.head_position(self.position_of(target) >> g.cluster_exp)
        self._send(MessageKind.LOOKUP_REQUEST, self.position_of(origin), start_head)
        path = [start_head]
        hops = 0
        section_hops = 0
        if g.scalable and section_head(start_head, g) != section_head(dest_head, g):
            src_sec = section_head(start_head, g)
            if src_sec != start_head:
                path.append(src_sec)
                hops += 1
            overlay = SupremeOverlay(g, self.activation())
            route = overlay.route(src_sec, dest_head)
            section_hops = len(route) - 1
            hops += section_hops
            path.extend(route[1:])
            if route[-1] != section_head(dest_head, g):
                return LookupResult(False, hops, section_hops, 0, path)
            if dest_head != route[-1]:
                if dest_head not in self._occ:
                    return LookupResult(False, hops, section_hops, 0, path)
                path.append(dest_head)
                hops += 1
        elif dest_head != start_head:
            if dest_head not in self._occ:
                return LookupResult(False, hops, section_hops, 0, path)
            path.append(dest_head)
            hops += 1
        if target not in self.nodes:
            return LookupResult(False, hops, section_hops, 0, path)
        forwards = 0 if self.position_of(target) == target else 1
        self._send(MessageKind.LOOKUP_REPLY, path[-1], self.position_of(origin))
        return LookupResult(True, hops, section_hops, forwards, path, target)

    # ----------------------------------------------------------- invariants

    def check_invariants(self):
        g = self.g
        assert len(self._occ) == len(self.nodes), "occupancy and membership disagree"
        for r, node in self.nodes.items():
            p = self.position_of(r)
            assert node.position == p, f"{r}: stale position {node.position} != {p}"
            assert self._occ.get(p) == r, f"position {p} not held by {r}"
        for r, p in self._perm.items():
            assert self._inv.get(p) == r, f"permutation broken at {r}->{p}"
        active = {c for c in range(g.cluster_count) if (c << g.cluster_exp) in self._occ} \
            if g.cluster_count <= 4096 else set(self._active)
        assert active == self._active, "activation set out of date"
        for c, ps in self._cluster_occ.items():
            assert ps, f"empty occupancy record for cluster {c}"
            assert c in self._active, f"cluster {c} has members but no head"
        if g.scalable:
            for c in self._active:
                sh = section_head(c << g.cluster_exp, g)
                assert sh in self._occ, f"cluster {c} active inside inactive section"
        total = 0
        for c, subs in self._subs.items():
            total += len(subs)
            hp = c << g.cluster_exp
            for s in subs:
                assert s in self.nodes, f"departed substitute {s} in cluster {c}"
                p = self.position_of(s)
                assert p >> g.cluster_exp == c and p != hp, f"substitute {s} outside cluster {c}"
                assert self.nodes[s].role == Role.SUBSTITUTE
            assert len(subs) <= self._backups_for(c)
        assert total == self._sub_total, "substitute tally drifted"
        for c in self._active:
            head = self._occ[c << g.cluster_exp]
            assert self.nodes[head].role in (Role.SUPER, Role.SUPREME), f"head {head} has role {self.nodes[head].role}"
        subs_all = {s for subs in self._subs.values() for s in subs}
        for r, node in self.nodes.items():
            if node.position % g.cluster_size and r not in subs_all:
                assert node.role == Role.REGULAR, f"member {r} has role {node.role}"
        assert self._announced_version == self._activation_version, \
            "an activation change was never announced to the other heads"
