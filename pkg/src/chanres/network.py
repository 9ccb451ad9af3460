"""Multi-cell event loop tying traffic, channel pools, metrics and controllers."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

from . import traffic
from .channels import SHARED, CellState, Outcome
from .controllers import Controller, StaticController, cost, make_controller
from .core import CLASSES, ORIGINATING, Call, CallClass, NetworkConfig, validate_config, validate_reservation
from .kernel import EventKind, EventQueue, np_stream, stream
from .metrics import MetricsWindow, merge_all


class ConfigError(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class InvariantError(AssertionError):
    pass


@dataclass
class Counters:
    """Whole-run tallies for one cell, warmup included."""

    arrived: list = field(default_factory=lambda: [0, 0, 0, 0])
    admitted: list = field(default_factory=lambda: [0, 0, 0, 0])
    refused: list = field(default_factory=lambda: [0, 0, 0, 0])
    reneged: list = field(default_factory=lambda: [0, 0, 0, 0])
    handoff_requests: int = 0


@dataclass
class SimResult:
    cfg: NetworkConfig
    cell_windows: list  # per cell, list of MetricsWindow
    counters: list  # per cell Counters
    queued_at_end: list  # per cell, per class
    events: int
    max_busy: int
    trace_digest: Optional[str] = None

    @property
    def windows(self) -> list:
        """Network-wide windows: cell windows merged index by index."""
        out = []
        for i in range(len(self.cell_windows[0])):
            merged = merge_all(cw[i] for cw in self.cell_windows)
            rvs = [cw[i].reservation for cw in self.cell_windows]
            merged.reservation = tuple(sum(r[k] for r in rvs) / len(rvs) for k in range(4))
            out.append(merged)
        return out

    def total(self) -> MetricsWindow:
        """Everything after warmup merged into one window."""
        return merge_all(w for cw in self.cell_windows for w in cw)

    def window_costs(self) -> list:
        """Mean cost across cells for each window index."""
        cfg = self.cfg
        n = len(self.cell_windows)
        return [
            sum(cost(cw[i], cfg.cost_weights, cfg.signaling_delay) for cw in self.cell_windows) / n
            for i in range(len(self.cell_windows[0]))
        ]

    def conservation_errors(self) -> list:
        errs = []
        for cell, (c, q) in enumerate(zip(self.counters, self.queued_at_end)):
            for k in CLASSES:
                rhs = c.admitted[k] + c.refused[k] + c.reneged[k] + q[k]
                if c.arrived[k] != rhs:
                    errs.append(f"cell {cell} {k.name}: arrived {c.arrived[k]} != {rhs}")
        return errs


class NetworkSimulator:
    """One replication of the cellular network.

    ``controllers`` may be supplied (one per cell) to carry learned state
    across runs; otherwise they are built from the config.
    """

    def __init__(self, cfg: NetworkConfig, controllers: Optional[list] = None,
                 check_invariants: bool = False, trace: bool = False):
        problems = validate_config(cfg)
        if problems:
            raise ConfigError(problems)
        self.cfg = cfg
        self.check = check_invariants
        self._hash = hashlib.sha256() if trace else None
        self.q = EventQueue()
        seed = cfg.seed
        n = cfg.num_cells
        if controllers is None:
            controllers = [make_controller(cfg, np_stream(seed, c, -1, "controller")) for c in range(n)]
        if len(controllers) != n:
            raise ValueError("need one controller per cell")
        self.controllers: list[Controller] = controllers
        self.cells = []
        for c, ctl in enumerate(controllers):
            rv = ctl.rv if isinstance(ctl, StaticController) else cfg.initial_reservation
            self.cells.append(CellState(c, cfg.channels_per_cell, rv, cfg.queue_capacity))
        self.factory = traffic.CallFactory(cfg.mean_call_duration)
        self.sources = {(s.cell, s.cls): s for s in traffic.sources(cfg)}
        self._arrival_rng = {key: stream(seed, key[0], key[1], "arrival") for key in self.sources}
        self._duration_rng = {key: stream(seed, key[0], key[1], "duration") for key in self.sources}
        self._dwell_rng = {(c, k): stream(seed, c, k, "dwell") for c in range(n) for k in CLASSES}
        self._target_rng = {(c, k): stream(seed, c, k, "target") for c in range(n) for k in CLASSES}
        self.mobile = cfg.handoff_mode == "mobility" and n >= 2
        self.calls: dict[int, Call] = {}
        self.counters = [Counters() for _ in range(n)]
        self.current: list[Optional[MetricsWindow]] = [None] * n
        self.cell_windows = [[] for _ in range(n)]
        self._last_t = [0.0] * n
        self.events = 0
        self._current_seq = 0
        self.max_busy = 0
        self._handlers = {
            EventKind.ARRIVAL: self._on_arrival,
            EventKind.SERVICE_END: self._on_service_end,
            EventKind.HANDOFF_REQUEST: self._on_handoff,
            EventKind.RENEGE: self._on_renege,
            EventKind.CONTROL_TICK: self._on_tick,
        }

    # -- bookkeeping ------------------------------------------------------------

    def _touch(self, cell: int, now: float) -> None:
        w = self.current[cell]
        if w is not None:
            w.busy_time += self.cells[cell].total_busy * (now - self._last_t[cell])
        self._last_t[cell] = now

    def _verify(self) -> None:
        cfg = self.cfg
        for st in self.cells:
            busy = st.total_busy
            if busy > cfg.channels_per_cell or min(st.busy) < 0 or st.shared_busy < 0:
                raise InvariantError(f"cell {st.cell}: occupancy {st.busy}+{st.shared_busy} out of range")
            for k in CLASSES:
                if st.queued(k) > cfg.queue_capacity[k]:
                    raise InvariantError(f"cell {st.cell}: {k.name} queue over capacity")
                c = self.counters[st.cell]
                if c.arrived[k] != c.admitted[k] + c.refused[k] + c.reneged[k] + st.queued(k):
                    raise InvariantError(f"cell {st.cell}: {k.name} conservation broken")

    # -- call lifecycle ------------------------------------------------------------

    def _request(self, call: Call, now: float) -> None:
        cell, cls = call.cell, call.cls
        self._touch(cell, now)
        self.counters[cell].arrived[cls] += 1
        w = self.current[cell]
        call.window = w
        if w is not None:
            w.arrived[cls] += 1
        if cls.is_handoff:
            call.handoff_requested_at = now
        outcome = self.cells[cell].try_admit(cls, call.id, now)
        if outcome is Outcome.DEDICATED:
            self._start(call, int(cls), now, 0.0)
        elif outcome is Outcome.SHARED:
            self._start(call, SHARED, now, 0.0)
        elif outcome is Outcome.QUEUED:
            call.status = "queued"
            call.enqueued_at = now
            self.calls[call.id] = call
            ev = self.q.schedule(now + self.cfg.renege_deadline[cls], EventKind.RENEGE, call.id)
            call.queue_token = ev.seq
        else:
            self.counters[cell].refused[cls] += 1
            if w is not None:
                w.refused[cls] += 1
            call.status = "done"
            self.calls.pop(call.id, None)

    def _start(self, call: Call, pool: int, now: float, wait: float) -> None:
        cls = call.cls
        call.pool = pool
        call.status = "active"
        self.calls[call.id] = call
        self.counters[call.cell].admitted[cls] += 1
        w = call.window
        if w is not None:
            w.admitted[cls] += 1
            if cls.is_handoff:
                w.latencies.append(wait)
        if self.mobile:
            dwell = traffic.draw_dwell(self.cfg, self._dwell_rng[call.cell, cls])
            if dwell < call.remaining_duration:
                self.q.schedule(now + dwell, EventKind.HANDOFF_REQUEST, (call.id, dwell))
                return
        self.q.schedule(now + call.remaining_duration, EventKind.SERVICE_END, call.id)

    def _release(self, call: Call, now: float) -> None:
        cell = call.cell
        self._touch(cell, now)
        got = self.cells[cell].release(call.pool, now)
        call.pool = None
        if got is not None:
            cid, _, wait, pool = got
            self._start(self.calls[cid], pool, now, wait)

    # -- event handlers ------------------------------------------------------------

    def _on_arrival(self, now, key):
        src = self.sources[key]
        gap = traffic.next_interarrival(src, self._arrival_rng[key])
        self.q.schedule(now + gap, EventKind.ARRIVAL, key)
        call = self.factory.draw_call(src.cls, src.cell, now, self._duration_rng[key])
        self._request(call, now)

    def _on_service_end(self, now, call_id):
        call = self.calls.pop(call_id)
        call.remaining_duration = 0.0
        self._release(call, now)
        call.status = "done"

    def _on_handoff(self, now, payload):
        call_id, dwell = payload
        call = self.calls.pop(call_id)
        call.remaining_duration = max(0.0, call.remaining_duration - dwell)
        old = call.cell
        self._release(call, now)
        self.counters[old].handoff_requests += 1
        if self.current[old] is not None:
            self.current[old].handoff_requests += 1
        target = traffic.handoff_target(old, self.cfg.num_cells, self._target_rng[old, call.cls])
        call.cls = call.cls.as_handoff()
        call.cell = target
        call.status = "new"
        self._request(call, now)

    def _on_renege(self, now, call_id):
        call = self.calls.get(call_id)
        ev_seq = self._current_seq
        if call is None or call.status != "queued" or call.queue_token != ev_seq:
            return
        self.cells[call.cell].renege(call_id, call.cls)
        self.counters[call.cell].reneged[call.cls] += 1
        if call.window is not None:
            call.window.reneged[call.cls] += 1
        call.status = "done"
        del self.calls[call_id]

    def _on_tick(self, now, index):
        """Close the running windows; unless this is the final tick, let every
        controller pick the next reservation and open fresh windows."""
        cfg = self.cfg
        final = index < 0
        for cell, st in enumerate(self.cells):
            self._touch(cell, now)
            w = self.current[cell]
            if w is not None:
                w.end = now
                self.cell_windows[cell].append(w)
            if final:
                self.current[cell] = None
                continue
            if w is not None:
                ctl = self.controllers[cell]
                ctl.notify_reward(cost(w, cfg.cost_weights, cfg.signaling_delay))
                rv = ctl.decide(w, st.rv, cfg)
                problem = validate_reservation(rv, cfg.channels_per_cell)
                if problem:
                    raise InvariantError(f"controller produced invalid reservation {rv}: {problem}")
                st.set_reservation(rv)
                for cid, _, wait, pool in st.fill_from_queues(now):
                    self._start(self.calls[cid], pool, now, wait)
            self.current[cell] = MetricsWindow(now, now, channels=cfg.channels_per_cell, reservation=tuple(st.rv))
        if not final:
            # tick k sits at warmup + k * T so window edges never drift
            nxt = cfg.warmup + (index + 1) * cfg.control_period
            if nxt >= cfg.sim_duration - 1e-9 * cfg.control_period:
                self.q.schedule(cfg.sim_duration, EventKind.CONTROL_TICK, -1)
            else:
                self.q.schedule(nxt, EventKind.CONTROL_TICK, index + 1)

    # -- driver ----------------------------------------------------------------------

    def start(self) -> None:
        """Seed the queue with first arrivals and the first control tick."""
        for key, src in self.sources.items():
            gap = traffic.next_interarrival(src, self._arrival_rng[key])
            if gap is not None:
                self.q.schedule(gap, EventKind.ARRIVAL, key)
        self.q.schedule(self.cfg.warmup, EventKind.CONTROL_TICK, 0)

    def step(self):
        """Process one event; returns it, or None once the run is over."""
        if self.q.peek_time() > self.cfg.sim_duration:
            return None
        ev = self.q.pop_next()
        self._current_seq = ev.seq
        self._handlers[ev.kind](ev.time, ev.payload)
        self.events += 1
        if self._hash is not None:
            self._hash.update(repr((ev.time, ev.seq, int(ev.kind), ev.payload)).encode())
        if self.check:
            self._verify()
            self.max_busy = max(self.max_busy, max(st.total_busy for st in self.cells))
        if ev.kind is EventKind.CONTROL_TICK and ev.payload < 0:
            return None
        return ev

    def run(self) -> SimResult:
        self.start()
        while self.step() is not None:
            pass
        return self.result()

    def inject(self, cls: CallClass, cell: int, duration: float) -> Call:
        """Offer a call with a fixed holding time at the current clock."""
        now = self.q.now
        call = Call(self.factory.next_id(), CallClass(cls), cell, now, duration, duration)
        self._request(call, now)
        return call

    def result(self) -> SimResult:
        cells = self.cells
        h = self._hash
        return SimResult(
            self.cfg,
            self.cell_windows,
            self.counters,
            [[st.queued(k) for k in CLASSES] for st in cells],
            self.events,
            self.max_busy,
            h.hexdigest() if h is not None else None,
        )


def simulate(cfg: NetworkConfig, **kw) -> SimResult:
    return NetworkSimulator(cfg, **kw).run()


def handoffs_per_call(result: SimResult) -> Optional[float]:
    """Handoff requests per admitted originating call, after warmup."""
    t = result.total()
    started = sum(t.admitted[c] for c in ORIGINATING)
    return t.handoff_requests / started if started else None


__all__ = ["NetworkSimulator", "SimResult", "simulate", "ConfigError", "InvariantError", "handoffs_per_call"]
