"""Discrete-event loop and seeded random streams."""
from __future__ import annotations

import heapq
import random
import zlib
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

STREAMS = ("ids", "churn", "lookups", "attrs", "bootstrap", "sessions")


@dataclass(order=True)
class SimEvent:
    time: float
    seq: int
    kind: str = field(compare=False)
    action: Callable[[], None] = field(compare=False, repr=False)


class Simulator:
    """Time-ordered event queue. Equal timestamps run in scheduling order."""

    def __init__(self):
        self._heap: List[SimEvent] = []
        self._seq = 0
        self.now = 0.0
        self.scheduled = 0
        self.processed = 0

    def schedule(self, delay: float, action: Callable[[], None], kind: str = "event") -> SimEvent:
        if delay < 0:
            raise ValueError("cannot schedule into the past")
        return self.at(self.now + delay, action, kind)

    def at(self, time: float, action: Callable[[], None], kind: str = "event") -> SimEvent:
        if time < self.now:
            raise ValueError(f"event at {time} precedes current time {self.now}")
        ev = SimEvent(time, self._seq, kind, action)
        self._seq += 1
        self.scheduled += 1
        heapq.heappush(self._heap, ev)
        return ev

    @property
    def pending(self) -> int:
        return len(self._heap)

    def step(self) -> bool:
        if not self._heap:
            return False
        ev = heapq.heappop(self._heap)
        assert ev.time >= self.now, "event queue went backwards"
        self.now = ev.time
        self.processed += 1
        ev.action()
        return True

    def run(self, until: Optional[float] = None):
        while self._heap:
            if until is not None and self._heap[0].time > until:
                self.now = max(self.now, until)
                return
            self.step()


def _stream_seed(seed: int, name: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode())])


def numpy_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one concern of a run."""
    return np.random.default_rng(_stream_seed(seed, name))


def python_stream(seed: int, name: str) -> random.Random:
    state = _stream_seed(seed, name).generate_state(2, dtype=np.uint64)
    return random.Random(int(state[0]) << 64 | int(state[1]))
