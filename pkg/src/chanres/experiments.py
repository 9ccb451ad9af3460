"""Replications, sweeps, oracle validation and controller training."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from scipy import stats

from . import analytic
from .controllers import make_controller
from .core import CLASSES, CallClass, NetworkConfig
from .kernel import np_stream
from .metrics import (
    blocking_probability,
    class_loss,
    dropping_probability,
    mean_handoff_latency,
    mean_sd,
    system_load,
)
from .network import NetworkSimulator, handoffs_per_call, simulate

SUMMARY_FIELDS = ("pb_rt", "pb_nrt", "pd_rt", "pd_nrt", "latency_mean_s", "load", "pb", "pd", "handoffs_per_call")


def summarize(result) -> dict:
    cfg = result.cfg
    t = result.total()
    return {
        "pb_rt": class_loss(t, CallClass.RT_O),
        "pb_nrt": class_loss(t, CallClass.NRT_O),
        "pd_rt": class_loss(t, CallClass.RT_H),
        "pd_nrt": class_loss(t, CallClass.NRT_H),
        "latency_mean_s": mean_handoff_latency(t, cfg.signaling_delay),
        "load": system_load(cfg),
        "pb": blocking_probability(t),
        "pd": dropping_probability(t),
        "handoffs_per_call": handoffs_per_call(result),
    }


def _run_summary(cfg: NetworkConfig) -> dict:
    return summarize(simulate(cfg))


def replicate(cfg: NetworkConfig, replications: int, jobs: int = 1, fn=_run_summary) -> list:
    """Run ``fn`` on seeds seed+0 .. seed+R-1; results keep replication order."""
    cfgs = [cfg.with_(seed=cfg.seed + r) for r in range(replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, cfgs))
    return [fn(c) for c in cfgs]


@dataclass
class SweepPoint:
    variable: str
    value: float
    runs: list  # per-replication summaries

    def aggregate(self) -> dict:
        out = {}
        for f in SUMMARY_FIELDS:
            m, sd, n = mean_sd([r[f] for r in self.runs])
            out[f] = m
            out[f + "_sd"] = sd
        out["n"] = len(self.runs)
        return out


SWEEP_VARIABLES = ("load_multiplier", "velocity")


def sweep(base: NetworkConfig, variable: str, values, replications: int, jobs: int = 1) -> list[SweepPoint]:
    if variable not in SWEEP_VARIABLES:
        raise ValueError(f"sweep variable must be one of {SWEEP_VARIABLES}")
    values = list(values)
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("sweep values must be non-empty and strictly increasing")
    if replications < 1:
        raise ValueError("replications must be ≥ 1")
    return [
        SweepPoint(variable, v, replicate(base.with_(**{variable: v}), replications, jobs))
        for v in values
    ]


def t_halfwidth(sd: Optional[float], n: int, level: float = 0.95) -> Optional[float]:
    if sd is None or n < 2:
        return None
    return stats.t.ppf(0.5 + level / 2, n - 1) * sd / math.sqrt(n)


# -- oracle validation ------------------------------------------------------------

# per-cell loads of 13, 9, 11 and 10 Erlangs on 15-channel pools: analytic
# loss between 2 % and 12 %
VALIDATION_CONFIG = NetworkConfig(
    num_cells=15,
    channels_per_cell=60,
    arrival_rates=(19.5, 13.5, 16.5, 15.0),
    mean_call_duration=10.0,
    reservation=(15, 15, 15, 15),
    sim_duration=900.0,
    warmup=100.0,
    control_period=100.0,
    seed=20240101,
)

MMCK_CONFIG = NetworkConfig(
    num_cells=1,
    channels_per_cell=1,
    arrival_rates=(0.0, 1.0, 0.0, 0.0),
    mean_call_duration=1.0,
    reservation=(0, 1, 0, 0),
    queue_capacity=(0, 1, 0, 0),
    renege_deadline=(1e12, 1e12, 1e12, 1e12),
    sim_duration=110_000.0,
    warmup=100.0,
    control_period=10_000.0,
    seed=7,
)

MIN_ARRIVALS = 100_000


@dataclass
class ClassCheck:
    name: str
    simulated: float
    analytic: float
    stderr: float
    arrivals: int
    abs_tol: float
    se_mult: Optional[float]

    @property
    def diff(self) -> float:
        return abs(self.simulated - self.analytic)

    @property
    def passed(self) -> bool:
        ok = self.diff <= self.abs_tol
        if self.se_mult is not None:
            ok = ok and self.diff <= self.se_mult * self.stderr
        return ok


class InsufficientSamples(RuntimeError):
    pass


def _class_losses(cfg):
    res = simulate(cfg)
    t = res.total()
    return [(t.lost(k), t.arrived[k]) for k in CLASSES]


def erlang_b_check(cfg: NetworkConfig = VALIDATION_CONFIG, replications: int = 10, jobs: int = 1,
                   abs_tol: float = 0.01, se_mult: float = 3.0) -> list[ClassCheck]:
    """Simulated per-class loss against Erlang-B on disjoint pure-loss pools."""
    if cfg.handoff_mode != "exogenous" or any(cfg.queue_capacity) or sum(cfg.initial_reservation) != cfg.channels_per_cell:
        raise ValueError("Erlang-B check needs exogenous, pure-loss, fully reserved cells")
    runs = replicate(cfg, replications, jobs, _class_losses)
    loads = cfg.offered_loads()
    rv = cfg.initial_reservation
    checks = []
    for k in CLASSES:
        if loads[k] <= 0:
            continue
        arrivals = sum(r[k][1] for r in runs)
        if arrivals < MIN_ARRIVALS:
            raise InsufficientSamples(f"{k.name}: {arrivals} arrivals, need {MIN_ARRIVALS}")
        per_rep = [r[k][0] / r[k][1] for r in runs if r[k][1]]
        m, sd, n = mean_sd(per_rep)
        se = sd / math.sqrt(n) if sd is not None else math.inf
        checks.append(ClassCheck(k.name, m, analytic.erlang_b(rv[k], loads[k]), se, arrivals, abs_tol, se_mult))
    return checks


def mmck_check(cfg: NetworkConfig = MMCK_CONFIG, abs_tol: float = 0.01) -> ClassCheck:
    """Single queued class against the M/M/c/K full-system probability."""
    active = [k for k in CLASSES if cfg.arrival_rates[k] > 0]
    if len(active) != 1 or cfg.num_cells != 1:
        raise ValueError("M/M/c/K check needs a single cell with one active class")
    k = active[0]
    c = cfg.initial_reservation[k] + cfg.initial_reservation.shared(cfg.channels_per_cell)
    res = simulate(cfg)
    cnt = res.counters[0]
    t = res.total()
    if t.arrived[k] < MIN_ARRIVALS:
        raise InsufficientSamples(f"{k.name}: {t.arrived[k]} arrivals, need {MIN_ARRIVALS}")
    sim = t.refused[k] / t.arrived[k]
    p = analytic.mmck_blocking(c, c + cfg.queue_capacity[k], cfg.offered_loads()[k])
    if any(cnt.reneged):
        raise ValueError("M/M/c/K check needs reneging disabled")
    se = math.sqrt(p * (1 - p) / t.arrived[k])
    return ClassCheck(f"{k.name} M/M/{c}/{c + cfg.queue_capacity[k]}", sim, p, se, t.arrived[k], abs_tol, None)


# -- training -------------------------------------------------------------------------


def train(cfg: NetworkConfig, episodes: int, state: Optional[dict] = None):
    """Run ``episodes`` episodes of ``episode_windows`` control windows each.

    Training resumes from ``state`` (as returned by a previous call) when
    given. Returns ``(rows, state)`` where rows are ``(episode, mean_cost)``.
    """
    if cfg.controller not in ("la", "neural"):
        raise ValueError("only learning controllers (la, neural) can be trained")
    if episodes < 1:
        raise ValueError("episodes must be ≥ 1")
    start = 0
    if state is not None:
        if state.get("kind") != cfg.controller:
            raise ValueError(f"state file holds a {state.get('kind')!r} controller, config asks for {cfg.controller!r}")
        start = int(state["episode"])
    W = cfg.episode_windows
    # a resumed run gets fresh traffic, still a pure function of the seed
    run_cfg = cfg.with_(
        sim_duration=cfg.warmup + episodes * W * cfg.control_period,
        seed=cfg.seed + start,
    )
    controllers = [make_controller(run_cfg, np_stream(run_cfg.seed, c, -1, "controller")) for c in range(cfg.num_cells)]
    if state is not None:
        saved = state["controllers"]
        for i, ctl in enumerate(controllers):
            ctl.load_state_dict(saved[i % len(saved)])
    res = NetworkSimulator(run_cfg, controllers=controllers).run()
    costs = res.window_costs()
    rows = []
    for e in range(episodes):
        chunk = costs[e * W:(e + 1) * W]
        rows.append((start + e + 1, math.fsum(chunk) / len(chunk)))
    new_state = {
        "kind": cfg.controller,
        "episode": start + episodes,
        "controllers": [ctl.state_dict() for ctl in controllers],
    }
    return rows, new_state


def save_state(state: dict, path) -> None:
    Path(path).write_text(json.dumps(state, indent=1), encoding="utf-8")


def load_state(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# toy instance: two originating classes on four channels, one Erlang each
TOY_CONFIG = NetworkConfig(
    num_cells=1,
    channels_per_cell=4,
    arrival_rates=(1.0, 1.0, 0.0, 0.0),
    mean_call_duration=1.0,
    signaling_delay=0.0,
    reservation=(1, 1, 1, 1),
    stride=1,
    control_period=50.0,
    episode_windows=10,
    warmup=10.0,
    sim_duration=20.0,
    controller="la",
    la_rate=0.1,
    la_cost_scale=0.6,
)


def toy_optimum(cfg: NetworkConfig = TOY_CONFIG):
    return analytic.brute_force_optimum(
        cfg.channels_per_cell, cfg.offered_loads(), cfg.cost_weights, cfg.lattice_stride, cfg.signaling_delay
    )
