"""Domain types and configuration for the four-class reservation model.

Channels in a cell are split into one dedicated pool per call class plus a
shared overflow pool holding whatever the reservation vector leaves over.
Pool order everywhere is NRT_O, RT_O, NRT_H, RT_H, matching the
(noc, roc, nhc, rhc) layout of :class:`ReservationVector`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import IntEnum
from pathlib import Path
from typing import NamedTuple, Optional


class CallClass(IntEnum):
    NRT_O = 0
    RT_O = 1
    NRT_H = 2
    RT_H = 3

    @property
    def is_handoff(self) -> bool:
        return self in (CallClass.NRT_H, CallClass.RT_H)

    @property
    def is_realtime(self) -> bool:
        return self in (CallClass.RT_O, CallClass.RT_H)

    def as_handoff(self) -> "CallClass":
        """Class a call takes on when it is handed to a neighbouring cell."""
        return CallClass.RT_H if self.is_realtime else CallClass.NRT_H


CLASSES = tuple(CallClass)
ORIGINATING = (CallClass.NRT_O, CallClass.RT_O)
HANDOFF = (CallClass.NRT_H, CallClass.RT_H)


class ReservationVector(NamedTuple):
    noc: int
    roc: int
    nhc: int
    rhc: int

    def shared(self, channels: int) -> int:
        return channels - sum(self)

    @classmethod
    def equal_split(cls, channels: int) -> "ReservationVector":
        # any remainder of C / 4 is left to the shared pool
        q = channels // 4
        return cls(q, q, q, q)


def validate_reservation(rv, channels: int) -> Optional[str]:
    """Return None when ``rv`` fits in ``channels``, else a violation message."""
    if channels < 1:
        return "channels_per_cell ≥ 1"
    if len(rv) != 4:
        return "reservation must have four components"
    if any(int(x) != x for x in rv):
        return "reservation components must be integers"
    if any(x < 0 for x in rv):
        return "reservation components must be ≥ 0"
    if sum(rv) > channels:
        return "sum exceeds C"
    return None


@dataclass(slots=True)
class Call:
    id: int
    cls: CallClass
    cell: int
    created_at: float
    total_duration: float
    remaining_duration: float
    handoff_requested_at: Optional[float] = None
    # runtime bookkeeping, owned by the simulator
    pool: Optional[int] = None  # class index of dedicated pool, -1 for shared
    status: str = "new"
    enqueued_at: float = 0.0
    queue_token: int = -1
    window: object = None


@dataclass(frozen=True)
class CostWeights:
    w_b_rt: float = 1.0
    w_b_nrt: float = 1.0
    w_d_rt: float = 10.0
    w_d_nrt: float = 5.0
    w_l: float = 1.0
    l_ref: float = 1.0


def _per_class(value, name: str, default: float) -> tuple:
    """Accept a {"RT_O": x, ...} mapping or a scalar; return pool-ordered tuple."""
    if value is None:
        return (default,) * 4
    if isinstance(value, (int, float)):
        return (value,) * 4
    if isinstance(value, dict):
        unknown = set(value) - {c.name for c in CLASSES}
        if unknown:
            raise ValueError(f"{name}: unknown class keys {sorted(unknown)}")
        return tuple(value.get(c.name, default) for c in CLASSES)
    raise ValueError(f"{name}: expected a mapping keyed by class name")


@dataclass(frozen=True)
class NetworkConfig:
    """Complete description of one simulation run.

    Per-class fields are tuples in pool order (NRT_O, RT_O, NRT_H, RT_H).
    Arrival rates are network-wide; every cell sees ``rate / num_cells``.
    """

    num_cells: int = 15
    channels_per_cell: int = 60
    arrival_rates: tuple = (20.0, 12.0, 10.0, 5.0)
    mean_call_duration: float = 10.0
    velocity: float = 20.0
    cell_diameter: float = 1000.0
    handoff_mode: str = "exogenous"
    queue_capacity: tuple = (0, 0, 0, 0)
    renege_deadline: tuple = (10.0, 2.0, 10.0, 2.0)
    signaling_delay: float = 0.1
    control_period: float = 60.0
    load_multiplier: float = 1.0
    seed: int = 1
    sim_duration: float = 3600.0
    warmup: float = 200.0
    # reservation control
    reservation: Optional[tuple] = None
    controller: str = "static"
    stride: Optional[int] = None
    cost_weights: CostWeights = field(default_factory=CostWeights)
    la_rate: float = 0.1
    la_cost_scale: float = 1.0
    nn_hidden: int = 16
    nn_learning_rate: float = 0.01
    nn_baseline_decay: float = 0.9
    episode_windows: int = 10

    @property
    def initial_reservation(self) -> ReservationVector:
        if self.reservation is None:
            return ReservationVector.equal_split(self.channels_per_cell)
        return ReservationVector(*(int(x) for x in self.reservation))

    @property
    def lattice_stride(self) -> int:
        if self.stride is not None:
            return int(self.stride)
        return max(1, math.ceil(self.channels_per_cell / 12))

    def cell_rates(self) -> tuple:
        """Per-cell arrival rate of each class, load multiplier applied."""
        return tuple(r * self.load_multiplier / self.num_cells for r in self.arrival_rates)

    def offered_loads(self) -> tuple:
        """Per-cell offered load in Erlangs for each class."""
        return tuple(r * self.mean_call_duration for r in self.cell_rates())

    @property
    def mean_dwell(self) -> float:
        return self.cell_diameter / self.velocity

    def with_(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)

    # -- JSON -----------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kw = dict(data)
        defaults = cls()
        if "arrival_rates" in kw:
            kw["arrival_rates"] = tuple(float(x) for x in _per_class(kw["arrival_rates"], "arrival_rates", 0.0))
        if "queue_capacity" in kw:
            kw["queue_capacity"] = tuple(int(x) for x in _per_class(kw["queue_capacity"], "queue_capacity", 0))
        if "renege_deadline" in kw:
            given = _per_class(kw["renege_deadline"], "renege_deadline", math.nan)
            kw["renege_deadline"] = tuple(
                float(d if not (isinstance(d, float) and math.isnan(d)) else defaults.renege_deadline[i])
                for i, d in enumerate(given)
            )
        if "reservation" in kw and kw["reservation"] is not None:
            rv = kw["reservation"]
            if isinstance(rv, dict):
                rv = [rv.get(k, 0) for k in ReservationVector._fields]
            kw["reservation"] = tuple(rv)
        if "cost_weights" in kw:
            kw["cost_weights"] = CostWeights(**kw["cost_weights"])
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("arrival_rates", "queue_capacity", "renege_deadline"):
            d[name] = {c.name: getattr(self, name)[c] for c in CLASSES}
        if self.reservation is not None:
            d["reservation"] = list(self.reservation)
        return d


def load_config(path) -> NetworkConfig:
    with open(Path(path), encoding="utf-8") as fh:
        return NetworkConfig.from_dict(json.load(fh))


def reference_config(**changes) -> NetworkConfig:
    """15 cells, 60 channels, RT_O/NRT_O/RT_H/NRT_H at 12/20/5/10 calls/s, 20 m/s."""
    return NetworkConfig(**changes)


def validate_config(cfg: NetworkConfig) -> list[str]:
    """List every violated invariant; an empty list means the config is usable."""
    v = []
    if cfg.num_cells < 1:
        v.append("num_cells ≥ 1")
    if cfg.channels_per_cell < 1:
        v.append("channels_per_cell ≥ 1")
    if len(cfg.arrival_rates) != 4 or any(not r >= 0 for r in cfg.arrival_rates):
        v.append("arrival_rates ≥ 0")
    if not cfg.mean_call_duration > 0:
        v.append("mean_call_duration > 0")
    if not cfg.velocity > 0:
        v.append("velocity > 0")
    if not cfg.cell_diameter > 0:
        v.append("cell_diameter > 0")
    if cfg.handoff_mode not in ("exogenous", "mobility"):
        v.append("handoff_mode ∈ {exogenous, mobility}")
    if len(cfg.queue_capacity) != 4 or any(q < 0 for q in cfg.queue_capacity):
        v.append("queue_capacity ≥ 0")
    if len(cfg.renege_deadline) != 4 or any(not d > 0 for d in cfg.renege_deadline):
        v.append("renege_deadline > 0")
    if not cfg.signaling_delay >= 0:
        v.append("signaling_delay ≥ 0")
    if not cfg.control_period > 0:
        v.append("control_period > 0")
    if not cfg.load_multiplier >= 0:
        v.append("load_multiplier ≥ 0")
    if not cfg.warmup >= 0:
        v.append("warmup ≥ 0")
    if not cfg.sim_duration > cfg.warmup:
        v.append("sim_duration > warmup")
    if not 0 <= cfg.seed < 2**64:
        v.append("seed is a 64-bit unsigned integer")
    if cfg.controller not in ("static", "la", "neural", "oracle"):
        v.append("controller ∈ {static, la, neural, oracle}")
    if cfg.channels_per_cell >= 1:
        problem = validate_reservation(cfg.initial_reservation, cfg.channels_per_cell)
        if problem:
            v.append(f"reservation: {problem}")
        if cfg.lattice_stride < 1:
            v.append("stride ≥ 1")
    w = cfg.cost_weights
    if min(w.w_b_rt, w.w_b_nrt, w.w_d_rt, w.w_d_nrt, w.w_l) < 0 or not w.l_ref > 0:
        v.append("cost weights ≥ 0 and l_ref > 0")
    if not 0 < cfg.la_rate < 1:
        v.append("0 < la_rate < 1")
    if not cfg.la_cost_scale > 0:
        v.append("la_cost_scale > 0")
    if cfg.nn_hidden < 1:
        v.append("nn_hidden ≥ 1")
    if cfg.episode_windows < 1:
        v.append("episode_windows ≥ 1")
    return v
