"""Per-cell channel pools, admission, FIFO queues and release-time promotion."""

from __future__ import annotations

from collections import deque
from enum import Enum

from .core import CallClass, ReservationVector

SHARED = -1

# order in which queues are scanned when a shared channel frees up
PROMOTION_ORDER = (CallClass.RT_H, CallClass.NRT_H, CallClass.RT_O, CallClass.NRT_O)


class Outcome(Enum):
    DEDICATED = "dedicated"
    SHARED = "shared"
    QUEUED = "queued"
    REFUSED = "refused"


class ChannelError(RuntimeError):
    pass


class CellState:
    """Occupancy of one cell.

    ``busy[k]`` counts calls on class k's dedicated pool and ``shared_busy``
    those on the overflow pool. After a reservation change a pool may hold
    more calls than its new size; the excess drains as calls end, and no
    admission ever pushes the cell past its channel count.
    """

    def __init__(self, cell: int, channels: int, rv: ReservationVector, queue_capacity=(0, 0, 0, 0)):
        self.cell = cell
        self.channels = channels
        self.rv = ReservationVector(*rv)
        self.busy = [0, 0, 0, 0]
        self.shared_busy = 0
        self.queue_capacity = tuple(queue_capacity)
        self.queues = [deque() for _ in range(4)]

    @property
    def shared_size(self) -> int:
        return self.channels - sum(self.rv)

    @property
    def total_busy(self) -> int:
        return sum(self.busy) + self.shared_busy

    def queued(self, cls: CallClass) -> int:
        return len(self.queues[cls])

    def set_reservation(self, rv: ReservationVector) -> None:
        self.rv = ReservationVector(*rv)

    def try_admit(self, cls: CallClass, call_id: int = -1, now: float = 0.0) -> Outcome:
        k = int(cls)
        if self.total_busy < self.channels:
            if self.busy[k] < self.rv[k]:
                self.busy[k] += 1
                return Outcome.DEDICATED
            if self.shared_busy < self.shared_size:
                self.shared_busy += 1
                return Outcome.SHARED
        if len(self.queues[k]) < self.queue_capacity[k]:
            self.queues[k].append((call_id, now))
            return Outcome.QUEUED
        return Outcome.REFUSED

    def release(self, pool: int, now: float):
        """Free one channel of ``pool`` and hand it to a waiting call if any.

        Returns ``(call_id, cls, wait, pool)`` for a promoted call or None.
        """
        if pool == SHARED:
            if self.shared_busy <= 0:
                raise ChannelError(f"cell {self.cell}: release on empty shared pool")
            self.shared_busy -= 1
        else:
            if self.busy[pool] <= 0:
                raise ChannelError(f"cell {self.cell}: release on empty pool {CallClass(pool).name}")
            self.busy[pool] -= 1
        return self._grant(now, pool)

    def _grant(self, now: float, prefer: int = SHARED):
        """Give one free channel to the longest-waiting eligible call.

        A freed dedicated channel goes to its own class first; otherwise the
        queues are scanned in promotion order, dedicated pools before shared.
        """
        if self.total_busy >= self.channels:
            return None
        order = PROMOTION_ORDER if prefer == SHARED else (CallClass(prefer),) + PROMOTION_ORDER
        for cls in order:
            if self.queues[cls] and self.busy[cls] < self.rv[cls]:
                call_id, t0 = self.queues[cls].popleft()
                self.busy[cls] += 1
                return call_id, cls, now - t0, int(cls)
        if self.shared_busy < self.shared_size:
            for cls in PROMOTION_ORDER:
                if self.queues[cls]:
                    call_id, t0 = self.queues[cls].popleft()
                    self.shared_busy += 1
                    return call_id, cls, now - t0, SHARED
        return None

    def fill_from_queues(self, now: float) -> list:
        """Promote queued calls into capacity opened by a reservation change."""
        granted = []
        while (got := self._grant(now)) is not None:
            granted.append(got)
        return granted

    def renege(self, call_id: int, cls: CallClass) -> None:
        q = self.queues[cls]
        for i, (cid, _) in enumerate(q):
            if cid == call_id:
                del q[i]
                return
        raise ChannelError(f"cell {self.cell}: call {call_id} is not queued in {CallClass(cls).name}")
