"""Periodic reservation controllers.

At every control tick the simulator hands each cell's controller the window
that just closed: ``notify_reward`` receives that window's cost, then
``decide`` returns the reservation vector for the next window.
"""

from __future__ import annotations

import math

import numpy as np

from . import analytic
from .core import CallClass, CostWeights, NetworkConfig, ReservationVector, validate_reservation
from .metrics import MetricsWindow, class_loss, mean_handoff_latency, utilisation


def cost(w: MetricsWindow, weights: CostWeights, delay: float = 0.0) -> float:
    """Weighted blocking, dropping and latency penalty of one window."""

    def p(cls):
        v = class_loss(w, cls)
        return 0.0 if v is None else v

    lat = mean_handoff_latency(w, delay)
    lat_term = 0.0 if lat is None else min(lat / weights.l_ref, 1.0)
    return (
        weights.w_b_rt * p(CallClass.RT_O)
        + weights.w_b_nrt * p(CallClass.NRT_O)
        + weights.w_d_rt * p(CallClass.RT_H)
        + weights.w_d_nrt * p(CallClass.NRT_H)
        + weights.w_l * lat_term
    )


def action_set(channels: int, stride: int) -> list[ReservationVector]:
    return analytic.lattice(channels, stride)


class Controller:
    kind = "base"

    def decide(self, window: MetricsWindow, current: ReservationVector, cfg: NetworkConfig) -> ReservationVector:
        raise NotImplementedError

    def notify_reward(self, cost: float) -> None:
        pass

    def state_dict(self) -> dict:
        return {"kind": self.kind}

    def load_state_dict(self, state: dict) -> None:
        pass


class StaticController(Controller):
    kind = "static"

    def __init__(self, rv: ReservationVector, channels: int):
        problem = validate_reservation(rv, channels)
        if problem:
            raise ValueError(f"static reservation rejected: {problem}")
        self.rv = ReservationVector(*rv)

    def decide(self, window, current, cfg):
        return self.rv


# -- learning automaton ------------------------------------------------------


def la_update(p: np.ndarray, chosen: int, beta: float, rate: float) -> np.ndarray:
    """Linear reward-inaction step: move mass toward ``chosen`` by ``rate * beta``."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("not a probability vector")
    if not 0 < rate < 1:
        raise ValueError("learning rate must lie in (0, 1)")
    if not 0 <= beta <= 1:
        raise ValueError("reward must lie in [0, 1]")
    step = rate * beta
    out = p * (1.0 - step)
    out[chosen] = p[chosen] + step * (1.0 - p[chosen])
    return out


def sample_index(p: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(p)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(i, len(p) - 1)


class LearningAutomatonController(Controller):
    kind = "la"

    def __init__(self, actions, rate: float, cost_scale: float, rng: np.random.Generator):
        self.actions = list(actions)
        self.rate = rate
        self.cost_scale = cost_scale
        self.rng = rng
        self.p = np.full(len(self.actions), 1.0 / len(self.actions))
        self.last = None

    def reward(self, cost: float) -> float:
        return max(0.0, 1.0 - cost / self.cost_scale)

    def notify_reward(self, cost):
        if self.last is not None:
            self.p = la_update(self.p, self.last, self.reward(cost), self.rate)

    def decide(self, window, current, cfg):
        self.last = sample_index(self.p, self.rng)
        return self.actions[self.last]

    def best(self) -> ReservationVector:
        return self.actions[int(np.argmax(self.p))]

    def state_dict(self):
        return {"kind": self.kind, "probs": self.p.tolist(), "last": self.last}

    def load_state_dict(self, state):
        p = np.asarray(state["probs"], dtype=float)
        if p.shape != self.p.shape:
            raise ValueError("saved automaton has a different action set")
        self.p = p / p.sum()
        self.last = None


# -- neural policy -------------------------------------------------------------


N_FEATURES = 10


def features(w: MetricsWindow, rv, cfg: NetworkConfig) -> np.ndarray:
    """Loss rates, latency, utilisation and the current split, all in [0, 1]."""
    probs = [class_loss(w, c) for c in (CallClass.RT_O, CallClass.NRT_O, CallClass.RT_H, CallClass.NRT_H)]
    lat = mean_handoff_latency(w, cfg.signaling_delay)
    util = utilisation(w)
    x = [0.0 if v is None else v for v in probs]
    x.append(0.0 if lat is None else min(lat / cfg.cost_weights.l_ref, 1.0))
    x.append(0.0 if util is None else min(util, 1.0))
    x.extend(v / cfg.channels_per_cell for v in rv)
    return np.array(x)


def init_params(n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator, scale: float = 0.1) -> dict:
    # zero output layer: the untrained policy is uniform over actions
    return {
        "W1": rng.normal(0.0, scale, (n_hidden, n_in)),
        "b1": np.zeros(n_hidden),
        "W2": np.zeros((n_out, n_hidden)),
        "b2": np.zeros(n_out),
    }


def _check_dims(params, x):
    W1, b1, W2, b2 = params["W1"], params["b1"], params["W2"], params["b2"]
    if W1.ndim != 2 or x.shape != (W1.shape[1],) or b1.shape != (W1.shape[0],):
        raise ValueError("input layer dimensions do not match")
    if W2.ndim != 2 or W2.shape[1] != W1.shape[0] or b2.shape != (W2.shape[0],):
        raise ValueError("output layer dimensions do not match")


def _softmax(s):
    e = np.exp(s - s.max())
    return e / e.sum()


def mlp_forward(params: dict, x) -> np.ndarray:
    """tanh hidden layer, linear scores, softmax over actions."""
    x = np.asarray(x, dtype=float)
    _check_dims(params, x)
    h = np.tanh(params["W1"] @ x + params["b1"])
    return _softmax(params["W2"] @ h + params["b2"])


def mlp_gradient(params: dict, x, chosen: int, advantage: float) -> dict:
    """Gradient of ``advantage * log pi(chosen | x)`` for every parameter."""
    x = np.asarray(x, dtype=float)
    _check_dims(params, x)
    h = np.tanh(params["W1"] @ x + params["b1"])
    p = _softmax(params["W2"] @ h + params["b2"])
    g_s = -advantage * p
    g_s[chosen] += advantage
    g_z = (params["W2"].T @ g_s) * (1.0 - h * h)
    return {"W1": np.outer(g_z, x), "b1": g_z, "W2": np.outer(g_s, h), "b2": g_s}


class NeuralController(Controller):
    """Softmax MLP policy over the action lattice, trained by REINFORCE."""

    kind = "neural"

    def __init__(self, actions, hidden: int, lr: float, baseline_decay: float, rng: np.random.Generator):
        self.actions = list(actions)
        self.lr = lr
        self.decay = baseline_decay
        self.rng = rng
        self.params = init_params(N_FEATURES, hidden, len(self.actions), rng)
        self.baseline = None
        self.pending = None

    def decide(self, window, current, cfg):
        x = features(window, current, cfg)
        i = sample_index(mlp_forward(self.params, x), self.rng)
        self.pending = (x, i)
        return self.actions[i]

    def notify_reward(self, cost):
        if self.pending is None:
            return
        r = -cost
        if self.baseline is None:
            self.baseline = r
        x, i = self.pending
        grads = mlp_gradient(self.params, x, i, r - self.baseline)
        for name, g in grads.items():
            self.params[name] += self.lr * g
        self.baseline = self.decay * self.baseline + (1.0 - self.decay) * r
        self.pending = None

    def state_dict(self):
        return {
            "kind": self.kind,
            "params": {k: v.tolist() for k, v in self.params.items()},
            "baseline": self.baseline,
        }

    def load_state_dict(self, state):
        params = {k: np.asarray(v, dtype=float) for k, v in state["params"].items()}
        if any(params[k].shape != self.params[k].shape for k in self.params):
            raise ValueError("saved network has different layer shapes")
        self.params = params
        self.baseline = state.get("baseline")
        self.pending = None


# -- analytic optimum --------------------------------------------------------------


def oracle_decide(cfg: NetworkConfig) -> ReservationVector:
    if cfg.handoff_mode != "exogenous":
        raise ValueError("oracle controller needs exogenous handoff traffic")
    if any(cfg.queue_capacity):
        raise ValueError("oracle controller needs a pure-loss system (no queues)")
    rv, _ = analytic.brute_force_optimum(
        cfg.channels_per_cell, cfg.offered_loads(), cfg.cost_weights, cfg.lattice_stride, cfg.signaling_delay
    )
    return rv


class OracleController(StaticController):
    kind = "oracle"

    def __init__(self, cfg: NetworkConfig):
        super().__init__(oracle_decide(cfg), cfg.channels_per_cell)


def make_controller(cfg: NetworkConfig, rng: np.random.Generator) -> Controller:
    if cfg.controller == "static":
        return StaticController(cfg.initial_reservation, cfg.channels_per_cell)
    if cfg.controller == "oracle":
        return OracleController(cfg)
    actions = action_set(cfg.channels_per_cell, cfg.lattice_stride)
    if cfg.controller == "la":
        return LearningAutomatonController(actions, cfg.la_rate, cfg.la_cost_scale, rng)
    if cfg.controller == "neural":
        return NeuralController(actions, cfg.nn_hidden, cfg.nn_learning_rate, cfg.nn_baseline_decay, rng)
    raise ValueError(f"unknown controller {cfg.controller!r}")


def mean_cost(windows, weights: CostWeights, delay: float) -> float:
    if not windows:
        return math.nan
    return math.fsum(cost(w, weights, delay) for w in windows) / len(windows)
