"""Event queue, simulation clock and named random streams."""

from __future__ import annotations

import heapq
import math
import random
from enum import IntEnum
from typing import Any, NamedTuple, Optional

import numpy as np


class EventKind(IntEnum):
    ARRIVAL = 0
    SERVICE_END = 1
    HANDOFF_REQUEST = 2
    RENEGE = 3
    CONTROL_TICK = 4


class Event(NamedTuple):
    time: float
    seq: int
    kind: EventKind
    payload: Any = None


class SchedulingError(RuntimeError):
    """An event was scheduled before the current clock."""


class EventQueue:
    """Min-heap of events ordered by (time, insertion sequence)."""

    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._seq = 0
        self.now = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, time: float, kind: EventKind, payload: Any = None) -> Event:
        if time < self.now:
            raise SchedulingError(f"event at t={time} scheduled with clock at {self.now}")
        self._seq += 1
        ev = Event(time, self._seq, kind, payload)
        heapq.heappush(self._heap, ev)
        return ev

    def pop_next(self) -> Optional[Event]:
        if not self._heap:
            return None
        ev = heapq.heappop(self._heap)
        self.now = ev.time
        return ev

    def peek_time(self) -> float:
        return self._heap[0].time if self._heap else math.inf


# Purposes get fixed ids so that the derived seeds never depend on the order
# in which streams are first requested.
PURPOSES = {
    "arrival": 1,
    "duration": 2,
    "dwell": 3,
    "target": 4,
    "controller": 5,
    "init": 6,
}


def _spawn_key(cell: int, cls: int, purpose: str) -> tuple:
    return (int(cell), int(cls) + 1, PURPOSES[purpose])


def stream(seed: int, cell: int, cls: int, purpose: str) -> random.Random:
    """Scalar random stream for one (cell, class, purpose) triple.

    Seeds are mixed with numpy's SeedSequence so adding a stream leaves
    every other stream untouched.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=_spawn_key(cell, cls, purpose))
    return random.Random(int.from_bytes(ss.generate_state(4, np.uint64).tobytes(), "little"))


def np_stream(seed: int, cell: int, cls: int, purpose: str) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=_spawn_key(cell, cls, purpose))
    return np.random.Generator(np.random.PCG64(ss))


def exp_sample(rng: random.Random, rate: float) -> float:
    if not rate > 0:
        raise ValueError(f"exponential rate must be positive, got {rate}")
    # 1 - random() lies in (0, 1]
    return -math.log(1.0 - rng.random()) / rate
