"""Arrival, holding-time, dwell-time and handoff-target sampling.

Cells sit on a ring; a handing-off call moves to one of its two neighbours.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Optional

from .core import Call, CallClass, NetworkConfig
from .kernel import exp_sample


@dataclass(frozen=True)
class TrafficSource:
    cell: int
    cls: CallClass
    rate: float  # per cell, load multiplier already applied

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("source rate must be ≥ 0")


def sources(cfg: NetworkConfig) -> list[TrafficSource]:
    """Every Poisson source the network runs.

    In mobility mode handoff traffic is produced by moving calls only, so the
    configured handoff-class rates are not used as sources.
    """
    rates = cfg.cell_rates()
    out = []
    for cell in range(cfg.num_cells):
        for cls in CallClass:
            if cfg.handoff_mode == "mobility" and cls.is_handoff:
                continue
            out.append(TrafficSource(cell, cls, rates[cls]))
    return out


def next_interarrival(src: TrafficSource, rng: random.Random) -> Optional[float]:
    """Time to the next arrival from ``src``; None for a silent source."""
    if src.rate <= 0:
        return None
    return exp_sample(rng, src.rate)


class CallFactory:
    """Draws new calls with exponential holding times and increasing ids."""

    def __init__(self, mean_duration: float):
        if not mean_duration > 0:
            raise ValueError("mean call duration must be positive")
        self.rate = 1.0 / mean_duration
        self._ids = itertools.count()

    def next_id(self) -> int:
        return next(self._ids)

    def draw_call(self, cls: CallClass, cell: int, now: float, rng: random.Random) -> Call:
        d = exp_sample(rng, self.rate)
        return Call(self.next_id(), cls, cell, now, d, d)


def draw_dwell(cfg: NetworkConfig, rng: random.Random) -> float:
    if not cfg.velocity > 0:
        raise ValueError("velocity must be positive")
    if not cfg.cell_diameter > 0:
        raise ValueError("cell diameter must be positive")
    return exp_sample(rng, cfg.velocity / cfg.cell_diameter)


def handoff_target(cell: int, num_cells: int, rng: random.Random) -> Optional[int]:
    """A uniformly chosen ring neighbour, or None when there is only one cell."""
    if num_cells < 2:
        return None
    step = 1 if rng.random() < 0.5 else -1
    return (cell + step) % num_cells
