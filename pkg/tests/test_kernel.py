import math

import pytest

from chanres.kernel import EventKind, EventQueue, SchedulingError, exp_sample, stream


def test_pops_in_time_order():
    q = EventQueue()
    q.schedule(5, EventKind.ARRIVAL)
    q.schedule(3, EventKind.ARRIVAL)
    assert q.pop_next().time == 3


def test_ties_break_fifo():
    q = EventQueue()
    a = q.schedule(7, EventKind.ARRIVAL, "first")
    b = q.schedule(7, EventKind.SERVICE_END, "second")
    assert a.seq < b.seq
    assert q.pop_next().payload == "first"
    assert q.pop_next().payload == "second"


def test_past_event_is_a_fault():
    q = EventQueue()
    q.schedule(2, EventKind.ARRIVAL)
    q.pop_next()
    with pytest.raises(SchedulingError):
        q.schedule(1, EventKind.ARRIVAL)


def test_empty_queue_returns_none():
    assert EventQueue().pop_next() is None


def test_clock_follows_pops():
    q = EventQueue()
    q.schedule(3, EventKind.ARRIVAL)
    q.schedule(5, EventKind.ARRIVAL)
    assert q.pop_next().time == 3 and q.now == 3
    q.pop_next()
    assert q.now == 5
    assert q.pop_next() is None and q.now == 5


def test_clock_never_decreases():
    q = EventQueue()
    rng = stream(3, 0, 0, "arrival")
    for _ in range(200):
        q.schedule(q.now + rng.random(), EventKind.ARRIVAL)
    last = 0.0
    while (ev := q.pop_next()) is not None:
        assert ev.time >= last
        last = ev.time
        if rng.random() < 0.3:
            q.schedule(q.now + rng.random(), EventKind.ARRIVAL)


@pytest.mark.parametrize("rate", [0, -1])
def test_nonpositive_rate_is_a_fault(rate):
    with pytest.raises(ValueError):
        exp_sample(stream(1, 0, 0, "arrival"), rate)


def test_same_seed_same_draws():
    a, b = stream(42, 1, 2, "duration"), stream(42, 1, 2, "duration")
    x = [exp_sample(a, 1.0) for _ in range(2)]
    assert x == [exp_sample(b, 1.0) for _ in range(2)]
    assert x[0] != x[1]


def test_streams_are_independent_of_each_other():
    assert stream(42, 1, 2, "duration").random() != stream(42, 1, 3, "duration").random()
    assert stream(42, 1, 2, "duration").random() != stream(43, 1, 2, "duration").random()


def test_exponential_mean_at_rate_two():
    n = 10**6
    rng = stream(2024, 0, 0, "arrival")
    m = math.fsum(exp_sample(rng, 2.0) for _ in range(n)) / n
    assert m == pytest.approx(0.5, abs=0.005)
    # the exponential has unit CV, so 3 standard errors is 3/sqrt(n) relative
    assert abs(m - 0.5) <= 0.5 * 3 / math.sqrt(n)
