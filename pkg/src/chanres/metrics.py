"""Window counters and the blocking / dropping / handoff-latency measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import HANDOFF, ORIGINATING, CallClass, NetworkConfig


@dataclass
class MetricsWindow:
    """Counters for one cell (or a merged set of cells) over [start, end).

    Call outcomes are booked against the window in which the call arrived,
    so a window may keep changing after it closes while its calls wait in a
    queue.
    """

    start: float
    end: float
    arrived: list = field(default_factory=lambda: [0, 0, 0, 0])
    admitted: list = field(default_factory=lambda: [0, 0, 0, 0])
    refused: list = field(default_factory=lambda: [0, 0, 0, 0])
    reneged: list = field(default_factory=lambda: [0, 0, 0, 0])
    latencies: list = field(default_factory=list)
    busy_time: float = 0.0  # channel-seconds
    channels: int = 0  # channel count covered, for utilisation
    handoff_requests: int = 0
    reservation: Optional[tuple] = None

    @property
    def duration(self) -> float:
        return self.end - self.start

    def lost(self, cls: CallClass) -> int:
        return self.refused[cls] + self.reneged[cls]

    def pending(self, cls: CallClass) -> int:
        return self.arrived[cls] - self.admitted[cls] - self.refused[cls] - self.reneged[cls]

    def merge(self, other: "MetricsWindow") -> "MetricsWindow":
        """Sum of two windows; reservation is dropped since it may differ."""
        return MetricsWindow(
            min(self.start, other.start),
            max(self.end, other.end),
            [a + b for a, b in zip(self.arrived, other.arrived)],
            [a + b for a, b in zip(self.admitted, other.admitted)],
            [a + b for a, b in zip(self.refused, other.refused)],
            [a + b for a, b in zip(self.reneged, other.reneged)],
            self.latencies + other.latencies,
            self.busy_time + other.busy_time,
            self.channels + other.channels,
            self.handoff_requests + other.handoff_requests,
        )


def merge_all(windows: Iterable[MetricsWindow]) -> MetricsWindow:
    it = iter(windows)
    acc = next(it)
    for w in it:
        acc = acc.merge(w)
    return acc


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def class_loss(w: MetricsWindow, cls: CallClass) -> Optional[float]:
    """Fraction of ``cls`` arrivals refused or reneged; None without arrivals."""
    return _ratio(w.lost(cls), w.arrived[cls])


def blocking_probability(w: MetricsWindow, cls: Optional[CallClass] = None) -> Optional[float]:
    if cls is not None:
        if cls.is_handoff:
            raise ValueError("blocking applies to originating classes")
        return class_loss(w, cls)
    return _ratio(sum(w.lost(c) for c in ORIGINATING), sum(w.arrived[c] for c in ORIGINATING))


def dropping_probability(w: MetricsWindow, cls: Optional[CallClass] = None) -> Optional[float]:
    if cls is not None:
        if not cls.is_handoff:
            raise ValueError("dropping applies to handoff classes")
        return class_loss(w, cls)
    return _ratio(sum(w.lost(c) for c in HANDOFF), sum(w.arrived[c] for c in HANDOFF))


def mean_handoff_latency(w: MetricsWindow, delay: float = 0.0) -> Optional[float]:
    """Mean of queue wait plus signalling delay over admitted handoff calls.

    ``w.latencies`` holds raw waits (grant time minus request time).
    """
    if not w.latencies:
        return None
    return math.fsum(w.latencies) / len(w.latencies) + delay


def utilisation(w: MetricsWindow) -> Optional[float]:
    if w.channels <= 0 or w.duration <= 0:
        return None
    return w.busy_time / (w.channels * w.duration)


def system_load(cfg: NetworkConfig) -> float:
    """Offered Erlangs per channel in one cell."""
    per_cell = sum(cfg.arrival_rates) * cfg.load_multiplier / cfg.num_cells
    return per_cell * cfg.mean_call_duration / cfg.channels_per_cell


def mean_sd(values: list) -> tuple:
    """Sample mean and standard deviation, skipping undefined entries."""
    xs = [v for v in values if v is not None]
    if not xs:
        return None, None, 0
    m = math.fsum(xs) / len(xs)
    if len(xs) < 2:
        return m, None, len(xs)
    var = math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1)
    return m, math.sqrt(var), len(xs)
