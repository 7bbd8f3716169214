"""Workload generators and the five experiment families.

Each ``run_*`` function takes a :class:`SimConfig` and returns
:class:`Metrics`. Randomness comes from named streams derived from
``cfg.seed`` (see :mod:`bsrone.engine`), so two runs with the same config are
identical and changing one sweep parameter leaves the other streams alone.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import json
import os
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .address_space import ActivationMap, NetworkGeometry
from .engine import Simulator, numpy_stream, python_stream
from .protocol import BROADCAST_KINDS, MessageKind, Network
from .selection import AttributeVector, CriteriaBounds, CriteriaWeights
from .tables import SupremeOverlay

log = logging.getLogger(__name__)

EXPERIMENTS = ("route", "join-overhead", "leave-overhead", "fault", "stability")

INT_TUPLES = ("cluster_sizes", "backup_sweep")

RING_KINDS = (MessageKind.REPLACEMENT_QUERY, MessageKind.REPLACEMENT_ANSWER)


@dataclass(frozen=True)
class SimConfig:
    experiment: str = "route"
    seed: int = 1
    ring_exp: int = 7
    cluster_exp: int = 2
    section_exp: Optional[int] = None
    # swept cluster sizes for the overhead and fault experiments
    cluster_sizes: Tuple[int, ...] = (4, 8, 16, 32)
    initial_population: int = 20
    steps: int = 5
    # step k (1-based) joins or removes k * batch nodes
    batch: int = 20
    messages_per_step: int = 10
    section_activity: float = 1.0
    departures: int = 4000
    snapshot_every: int = 500
    departure_interval: float = 1.0
    election_hop_latency: float = 0.0
    backup_count: int = 1
    # substitute counts compared by the fault experiment; empty means backup_count only
    backup_sweep: Tuple[int, ...] = ()
    supreme_backup_count: int = 1
    cohorts: int = 6
    cohort_size: int = 1000
    session_clock: bool = False
    # ticks between attribute rounds; 0 disables them
    refresh_interval: float = 100.0
    weights: Tuple[float, float, float, float] = (0.4, 0.3, 0.1, 0.2)
    weighted: bool = True
    upper: Tuple[float, float, float, float] = (100.0, 7200.0, 20.0, 10.0)
    lower: Tuple[float, float, float, float] = (1.0, 60.0, 0.0, 0.0)
    bandwidth_median: float = 10.0
    bandwidth_sigma: float = 1.0
    session_mean: float = 1800.0
    # log-normal spread of per-node mean session length; 0 means one shared mean
    session_spread: float = 0.0
    willingness_max: int = 10
    identical_attributes: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; pick one of {EXPERIMENTS}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        NetworkGeometry(self.ring_exp, self.cluster_exp, self.section_exp)
        for cs in self.cluster_sizes:
            if cs < 2 or cs & (cs - 1) or cs > self.size:
                raise ValueError(f"cluster size {cs} must be a power of two in [2, {self.size}]")
        if not 0 <= self.initial_population <= self.size:
            raise ValueError(f"initial population must lie in [0, {self.size}]")
        for name in ("steps", "batch", "messages_per_step", "departures", "snapshot_every",
                     "cohorts", "cohort_size", "backup_count"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if any(b < 0 for b in self.backup_sweep):
            raise ValueError("backup_sweep entries must be non-negative")
        for name in ("departure_interval", "election_hop_latency", "refresh_interval",
                     "bandwidth_sigma", "session_spread"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.session_mean <= 0 or self.bandwidth_median <= 0:
            raise ValueError("session_mean and bandwidth_median must be positive")
        if not 0.0 <= self.section_activity <= 1.0:
            raise ValueError("section_activity is a probability")
        if not 0 <= self.willingness_max <= 10:
            raise ValueError("willingness_max must lie in 0..10")
        self.criteria_weights()
        self.criteria_bounds()

    @property
    def size(self) -> int:
        return 1 << self.ring_exp

    def criteria_weights(self) -> CriteriaWeights:
        return CriteriaWeights(*self.weights)

    def criteria_bounds(self) -> CriteriaBounds:
        return CriteriaBounds(self.upper, self.lower)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    # --------------------------------------------------------------- files

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["sim"] = {f.name: _format_value(getattr(self, f.name)) for f in dataclasses.fields(self)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    @classmethod
    def from_ini(cls, text: str, base: Optional["SimConfig"] = None) -> "SimConfig":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        if not cp.has_section("sim"):
            raise ValueError("config needs a [sim] section")
        known = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for key, raw in cp["sim"].items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = _parse_value(key, raw, (base or cls()).__getattribute__(key))
        if base is None:
            exp = values.get("experiment", cls.experiment)
            base = default_config(exp)
        return base.replace(**values)


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _parse_value(key: str, raw: str, like):
    raw = raw.strip()
    if key == "section_exp":
        return None if raw.lower() in ("", "none") else int(raw)
    if isinstance(like, bool):
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{key}: expected a boolean, got {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    if isinstance(like, tuple):
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        conv = int if key in INT_TUPLES else float
        return tuple(conv(p) for p in parts)
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def default_config(experiment: str) -> SimConfig:
    """Resolved defaults for one experiment family."""
    if experiment == "route":
        return SimConfig(experiment="route", ring_exp=13, cluster_exp=5, section_exp=5,
                         steps=8, messages_per_step=10, initial_population=0)
    if experiment == "join-overhead":
        return SimConfig(experiment="join-overhead", ring_exp=7, initial_population=20,
                         steps=5, batch=3)
    if experiment == "leave-overhead":
        return SimConfig(experiment="leave-overhead", ring_exp=7, initial_population=120,
                         steps=5, batch=24)
    if experiment == "fault":
        return SimConfig(experiment="fault", ring_exp=12, initial_population=4096,
                         departures=4000, snapshot_every=500, departure_interval=1.0,
                         election_hop_latency=0.5, backup_sweep=(1, 3))
    if experiment == "stability":
        return SimConfig(experiment="stability", ring_exp=7, cluster_exp=4, initial_population=50,
                         cohorts=6, cohort_size=1000, session_clock=True,
                         weights=(0.1, 0.8, 0.05, 0.05), session_mean=20.0,
                         session_spread=3.0, refresh_interval=100.0)
    raise ValueError(f"unknown experiment {experiment!r}")


# ------------------------------------------------------------------ metrics

@dataclass
class Metrics:
    """Rows of one experiment plus run-level notes.

    Row fields depend on the experiment; counts are never negative and
    ``mean_hops <= max_hops`` on every routing step.
    """

    experiment: str
    config: SimConfig
    rows: List[dict] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    trace: Optional[List[dict]] = None

    def add(self, **row):
        self.rows.append(row)

    def column(self, name: str, **where) -> List:
        return [r[name] for r in self.rows if all(r.get(k) == v for k, v in where.items())]

    def validate(self):
        for r in self.rows:
            for k, v in r.items():
                if isinstance(v, (int, float)) and not isinstance(v, bool) and v < 0:
                    raise AssertionError(f"negative {k} in row {r}")
            if "mean_hops" in r and r["messages"]:
                assert r["mean_hops"] <= r["max_hops"] + 1e-12, f"mean above max in {r}"

    def fieldnames(self) -> List[str]:
        names: List[str] = []
        for r in self.rows:
            for k in r:
                if k not in names:
                    names.append(k)
        return names

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.config.to_ini().splitlines():
            if line.strip():
                buf.write(f"# {line}\n")
        w = csv.DictWriter(buf, fieldnames=self.fieldnames(), lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _csv_cell(v) for k, v in r.items()})
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.config.seed,
            "config": self.config.as_dict(),
            "rows": len(self.rows),
            "final": self.rows[-1] if self.rows else None,
            "notes": list(self.notes),
        }

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv().encode()).hexdigest()


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


# -------------------------------------------------------------- population

def sample_attributes(rng: np.random.Generator, count: int, cfg: SimConfig) -> List[AttributeVector]:
    """Synthetic nodes: log-normal bandwidth, exponential expected session, uniform willingness."""
    if cfg.identical_attributes:
        same = AttributeVector(cfg.bandwidth_median, cfg.session_mean, 0, cfg.willingness_max // 2)
        return [same] * count
    bw = rng.lognormal(math.log(cfg.bandwidth_median), cfg.bandwidth_sigma, count)
    session = rng.exponential(cfg.session_mean, count)
    will = rng.integers(0, cfg.willingness_max + 1, count)
    return [AttributeVector(float(b), float(s), 0, int(w)) for b, s, w in zip(bw, session, will)]


def _network(cfg: SimConfig, g: NetworkGeometry, **kw) -> Network:
    return Network(g, cfg.criteria_weights(), cfg.criteria_bounds(),
                   backup_count=kw.pop("backup_count", cfg.backup_count),
                   supreme_backup_count=cfg.supreme_backup_count,
                   weighted=cfg.weighted,
                   rng=python_stream(cfg.seed, "bootstrap"),
                   session_clock=cfg.session_clock, **kw)


def _cluster_exp(size: int) -> int:
    return size.bit_length() - 1


def _signal_columns(net: Network, phase: str) -> dict:
    by_kind = net.counter.by_phase().get(phase, {})
    broadcast = sum(by_kind.get(k.value, 0) for k in BROADCAST_KINDS)
    ring = sum(by_kind.get(k.value, 0) for k in RING_KINDS)
    sync = by_kind.get(MessageKind.SUBSTITUTE_SYNC.value, 0)
    total = sum(by_kind.values())
    return {"signals": total, "broadcast": broadcast, "ring": ring, "sync": sync,
            "exchange_msgs": by_kind.get(MessageKind.ID_EXCHANGE.value, 0)}


# ---------------------------------------------------------------- routing

def run_routing_experiment(cfg: SimConfig) -> Metrics:
    """Greedy supreme-table routing between random section heads on growing rings.

    Step ``k`` uses ``2**k`` sections of ``2**section_exp`` IDs; each section
    is active with probability ``section_activity``.
    """
    if cfg.section_exp is None:
        raise ValueError("the routing experiment needs scalable mode (section_exp)")
    m = Metrics("route", cfg)
    act_rng = numpy_stream(cfg.seed, "ids")
    pair_rng = numpy_stream(cfg.seed, "lookups")
    for k in range(1, cfg.steps + 1):
        g = NetworkGeometry(cfg.section_exp + k, min(cfg.cluster_exp, cfg.section_exp), cfg.section_exp)
        count = g.section_count
        draw = act_rng.random(count)
        active = [i for i in range(count) if draw[i] < cfg.section_activity]
        if len(active) < 2:
            m.notes.append(f"step {k}: {len(active)} active section(s), skipped")
            log.info("routing step %d skipped: fewer than 2 active sections", k)
            continue
        activation = ActivationMap(frozenset(), frozenset(active))
        overlay = SupremeOverlay(g, activation)
        heads = [i << g.section_exp for i in active]
        hops = []
        for _ in range(cfg.messages_per_step):
            a, b = pair_rng.choice(len(heads), size=2, replace=False)
            hops.append(len(overlay.route(heads[a], heads[b])) - 1)
        m.add(step=k, sections=count, active_sections=len(active), messages=len(hops),
              mean_hops=float(np.mean(hops)) if hops else 0.0,
              max_hops=int(max(hops)) if hops else 0)
        m.validate()
    return m


# ------------------------------------------------------- join and leave

def _population_plan(cfg: SimConfig):
    """Shuffled ID order and per-ID attributes, shared by every sweep point."""
    order = [int(i) for i in numpy_stream(cfg.seed, "ids").permutation(cfg.size)]
    attrs = sample_attributes(numpy_stream(cfg.seed, "attrs"), cfg.size, cfg)
    return order, attrs


def _fill(net: Network, ids: Iterable[int], attrs: Sequence[AttributeVector], clock: List[float]):
    for i in ids:
        net.now = clock[0]
        net.handle_join(i, attrs[i])
        clock[0] += 1.0


def run_join_overhead(cfg: SimConfig) -> Metrics:
    """Signals caused by growing batches of joins into a partly filled network.

    Every step starts again from the same ``initial_population`` nodes and
    then admits ``step * batch`` newcomers. ``signals`` counts every message
    of the measured joins; ``broadcast`` counts head-wide announcements only.
    """
    m = Metrics("join-overhead", cfg)
    order, attrs = _population_plan(cfg)
    base = order[:cfg.initial_population]
    for cs in cfg.cluster_sizes:
        g = NetworkGeometry(cfg.ring_exp, _cluster_exp(cs))
        for k in range(1, cfg.steps + 1):
            want = k * cfg.batch
            room = cfg.size - cfg.initial_population
            if want > room:
                m.notes.append(f"cluster {cs} step {k}: batch {want} capped at {room}")
                want = room
            net = _network(cfg, g)
            clock = [0.0]
            net.counter.phase = "setup"
            _fill(net, base, attrs, clock)
            net.counter.phase = "measure"
            before = net.exchanges
            _fill(net, order[cfg.initial_population:cfg.initial_population + want], attrs, clock)
            m.add(cluster_size=cs, step=k, joins=want, exchanges=net.exchanges - before,
                  **_signal_columns(net, "measure"))
    m.validate()
    return m


def run_leave_overhead(cfg: SimConfig) -> Metrics:
    """Signals caused by removing growing batches of random nodes.

    Every step rebuilds the ``initial_population`` network through joins and
    then removes ``step * batch`` present nodes in random order.
    """
    m = Metrics("leave-overhead", cfg)
    order, attrs = _population_plan(cfg)
    base = order[:cfg.initial_population]
    churn = numpy_stream(cfg.seed, "churn")
    removal = [base[i] for i in churn.permutation(len(base))]
    for cs in cfg.cluster_sizes:
        g = NetworkGeometry(cfg.ring_exp, _cluster_exp(cs))
        for k in range(1, cfg.steps + 1):
            want = k * cfg.batch
            if want > len(base):
                m.notes.append(f"cluster {cs} step {k}: only {len(base)} nodes to remove")
                want = len(base)
            net = _network(cfg, g)
            clock = [0.0]
            net.counter.phase = "setup"
            _fill(net, base, attrs, clock)
            net.counter.phase = "measure"
            before = net.exchanges
            heads = 0
            for r in removal[:want]:
                net.now = clock[0]
                if net.handle_leave(r) == "head":
                    heads += 1
                clock[0] += 1.0
            m.add(cluster_size=cs, step=k, removals=want, head_departures=heads,
                  exchanges=net.exchanges - before, **_signal_columns(net, "measure"))
    m.validate()
    return m


# ------------------------------------------------------------------ fault

def run_fault_tolerance(cfg: SimConfig) -> Metrics:
    """Failed clusters under steady departures from an initially full ring.

    A departure happens every ``departure_interval``. Replacing a departed
    head takes one election round trip over the active heads, each hop
    costing ``election_hop_latency``; until it settles the cluster has no
    ready substitute beyond those left over. A cluster fails when its head
    leaves with no ready substitute. Counts are cumulative at each snapshot.
    """
    m = Metrics("fault", cfg)
    population = cfg.initial_population
    order, attrs = _population_plan(cfg)
    present = sorted(order[:population])
    churn = numpy_stream(cfg.seed, "churn")
    leaving = [present[i] for i in churn.permutation(len(present))][:cfg.departures]
    for backups in (cfg.backup_sweep or (cfg.backup_count,)):
        for cs in cfg.cluster_sizes:
            g = NetworkGeometry(cfg.ring_exp, _cluster_exp(cs))
            sim = Simulator()
            net = _network(cfg, g, backup_count=backups,
                           election_hop_latency=cfg.election_hop_latency,
                           scheduler=_scheduler(sim, lambda: net))
            net.bootstrap({r: attrs[r] for r in present})
            done = [0]

            def depart(r, net=net, sim=sim, done=done):
                net.now = sim.now
                net.handle_leave(r)
                done[0] += 1

            for i, r in enumerate(leaving):
                sim.at((i + 1) * cfg.departure_interval, lambda r=r: depart(r), "leave")
            m.add(cluster_size=cs, backups=backups, departures=0, failed_clusters=0, failure_events=0)
            step = cfg.snapshot_every or len(leaving) or 1
            for snap in range(step, len(leaving) + 1, step):
                sim.run(until=snap * cfg.departure_interval)
                m.add(cluster_size=cs, backups=backups, departures=done[0],
                      failed_clusters=len({c for _, c in net.failures}), failure_events=len(net.failures))
    m.validate()
    return m


def _scheduler(sim: Simulator, get_net: Callable[[], Network]):
    def schedule(delay: float, callback: Callable[[], None]):
        def fire():
            get_net().now = sim.now
            callback()
        sim.schedule(delay, fire, "election")
    return schedule


# -------------------------------------------------------------- stability

def run_stability(cfg: SimConfig, trace: bool = False) -> Metrics:
    """ID exchanges per cohort of arrivals under matched churn.

    Each node stays for an exponential session whose mean is drawn per node
    (log-normal around ``session_mean`` with spread ``session_spread``).
    Whenever a node leaves, a newcomer with a free ID arrives, so the
    population stays at ``initial_population``. Exchanges are counted per
    ``cohort_size`` arrivals, together with the sum of exchange counter
    increments, which is always twice the exchange count.
    """
    m = Metrics("stability", cfg)
    g = NetworkGeometry(cfg.ring_exp, cfg.cluster_exp, cfg.section_exp)
    sim = Simulator()
    net = _network(cfg, g, record_trace=trace,
                   election_hop_latency=cfg.election_hop_latency,
                   scheduler=_scheduler(sim, lambda: net) if cfg.election_hop_latency > 0 else None)
    id_rng = numpy_stream(cfg.seed, "ids")
    attr_rng = numpy_stream(cfg.seed, "attrs")
    sess_rng = numpy_stream(cfg.seed, "sessions")
    total_arrivals = cfg.cohorts * cfg.cohort_size
    # k_gone keeps the exchange counters of nodes that already left
    state = {"arrivals": 0, "cohort_ex": 0, "cohort_k": 0, "k_gone": 0}

    def k_sum() -> int:
        return sum(n.attrs.id_exchanges for n in net.nodes.values()) + state["k_gone"]

    def session() -> float:
        mean = cfg.session_mean
        if cfg.session_spread > 0:
            mean *= float(sess_rng.lognormal(0.0, cfg.session_spread))
        return float(sess_rng.exponential(mean))

    def admit():
        free = [i for i in range(g.size) if i not in net.nodes and net.position_of(i) not in net._occ]
        r = free[int(id_rng.integers(len(free)))]
        attrs = sample_attributes(attr_rng, 1, cfg)[0].replace(time_on_network=0.0)
        net.now = sim.now
        net.handle_join(r, attrs)
        sim.schedule(session(), lambda r=r: leave(r), "leave")
        return r

    def leave(r):
        net.now = sim.now
        state["k_gone"] += net.nodes[r].attrs.id_exchanges
        net.handle_leave(r)
        if state["arrivals"] < total_arrivals:
            state["arrivals"] += 1
            admit()
            if state["arrivals"] % cfg.cohort_size == 0:
                cohort = state["arrivals"] // cfg.cohort_size
                ks = k_sum()
                m.add(cohort=cohort, arrivals=state["arrivals"], time=sim.now,
                      exchanges=net.exchanges - state["cohort_ex"],
                      k_increments=ks - state["cohort_k"])
                state["cohort_ex"] = net.exchanges
                state["cohort_k"] = ks

    def refresh():
        net.now = sim.now
        net.refresh_attributes()
        if state["arrivals"] < total_arrivals:
            sim.schedule(cfg.refresh_interval, refresh, "refresh")

    for _ in range(cfg.initial_population):
        admit()
    if cfg.refresh_interval > 0:
        sim.schedule(cfg.refresh_interval, refresh, "refresh")
    state["cohort_ex"] = net.exchanges
    state["cohort_k"] = k_sum()
    while state["arrivals"] < total_arrivals and sim.step():
        pass
    if state["arrivals"] < total_arrivals:
        m.notes.append(f"churn stopped after {state['arrivals']} arrivals")
    m.trace = net.trace
    m.validate()
    return m


# ------------------------------------------------------------ trace replay

def trace_lines(m: Metrics) -> List[str]:
    """JSON lines: a header carrying the resolved config, then one record per event."""
    if m.trace is None:
        raise ValueError("run was not traced")
    lines = [json.dumps({"header": {"experiment": m.experiment, "config": m.config.to_ini()}},
                        sort_keys=True)]
    lines.extend(json.dumps(r, sort_keys=True) for r in m.trace)
    return lines


@dataclass
class ReplayReport:
    events: int
    mismatches: List[Tuple[int, dict, dict]]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def replay(lines: Iterable[str]) -> ReplayReport:
    """Re-apply a stability trace to a fresh network and compare every signal delta."""
    it = iter(lines)
    head = json.loads(next(it))
    if "header" not in head:
        raise ValueError("trace lacks a header line")
    cfg = SimConfig.from_ini(head["header"]["config"])
    if cfg.election_hop_latency > 0:
        raise ValueError("replay needs elections that settle within their departure")
    g = NetworkGeometry(cfg.ring_exp, cfg.cluster_exp, cfg.section_exp)
    net = _network(cfg, g, record_trace=True)
    mismatches = []
    count = 0
    for i, line in enumerate(it):
        if not line.strip():
            continue
        rec = json.loads(line)
        net.now = rec["t"]
        kind = rec["event"]
        if kind == "join":
            net.handle_join(rec["actor"], AttributeVector(*rec["attrs"]))
        elif kind == "leave":
            net.handle_leave(rec["actor"])
        elif kind == "refresh":
            net.refresh_attributes()
        elif kind == "improve":
            net.promote_on_improvement(rec["actor"], AttributeVector(*rec["attrs"]))
        elif kind == "exchange":
            net.id_exchange(rec["actor"], rec["other"])
        else:
            raise ValueError(f"unknown trace event {kind!r}")
        count += 1
        got = json.loads(json.dumps(net.trace[-1], sort_keys=True))
        if got != rec:
            mismatches.append((i, rec, got))
    return ReplayReport(count, mismatches)


# ---------------------------------------------------------------- outputs

def write_outputs(m: Metrics, out_dir: str, csv_out: bool = True, json_out: bool = False) -> List[str]:
    """Write ``<experiment>.csv`` / ``.json`` / ``.trace.jsonl`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    stem = os.path.join(out_dir, m.experiment)
    if csv_out:
        with open(stem + ".csv", "w", newline="") as fh:
            fh.write(m.to_csv())
        written.append(stem + ".csv")
    if json_out:
        with open(stem + ".json", "w") as fh:
            json.dump(m.summary(), fh, indent=2, sort_keys=True, default=list)
            fh.write("\n")
        written.append(stem + ".json")
    if m.trace is not None:
        with open(stem + ".trace.jsonl", "w") as fh:
            fh.write("\n".join(trace_lines(m)) + "\n")
        written.append(stem + ".trace.jsonl")
    return written


RUNNERS: Dict[str, Callable[[SimConfig], Metrics]] = {
    "route": run_routing_experiment,
    "join-overhead": run_join_overhead,
    "leave-overhead": run_leave_overhead,
    "fault": run_fault_tolerance,
    "stability": run_stability,
}


def run(cfg: SimConfig) -> Metrics:
    return RUNNERS[cfg.experiment](cfg)
