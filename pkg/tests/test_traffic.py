import math
from collections import Counter

import pytest

from chanres.core import CallClass, NetworkConfig
from chanres.kernel import stream
from chanres.traffic import CallFactory, TrafficSource, draw_dwell, handoff_target, next_interarrival, sources


def test_per_cell_rate_from_reference_rate():
    cfg = NetworkConfig()
    src = {(s.cell, s.cls): s for s in sources(cfg)}
    assert src[0, CallClass.RT_O].rate == pytest.approx(12 / 15)
    src2 = {(s.cell, s.cls): s for s in sources(cfg.with_(load_multiplier=2))}
    assert src2[0, CallClass.RT_O].rate == pytest.approx(1.6)


def test_silent_source_emits_nothing():
    assert next_interarrival(TrafficSource(0, CallClass.RT_O, 0.0), stream(1, 0, 0, "arrival")) is None


def test_mobility_mode_has_no_exogenous_handoff_sources():
    classes = {s.cls for s in sources(NetworkConfig(handoff_mode="mobility"))}
    assert classes == {CallClass.RT_O, CallClass.NRT_O}


def test_call_duration_mean():
    f = CallFactory(10.0)
    rng = stream(5, 0, 0, "duration")
    n = 10**6
    m = math.fsum(f.draw_call(CallClass.RT_O, 0, 0.0, rng).total_duration for _ in range(n)) / n
    assert m == pytest.approx(10.0, abs=0.05)


def test_call_fields():
    f = CallFactory(10.0)
    rng = stream(5, 0, 0, "duration")
    a = f.draw_call(CallClass.NRT_O, 3, 12.5, rng)
    b = f.draw_call(CallClass.NRT_O, 3, 13.0, rng)
    assert a.created_at == 12.5
    assert a.remaining_duration == a.total_duration
    assert b.id > a.id
    assert a.handoff_requested_at is None


def test_mean_dwell_is_diameter_over_speed():
    cfg = NetworkConfig(cell_diameter=1000, velocity=20)
    assert cfg.mean_dwell == 50
    n = 10**5
    rng = stream(9, 0, 0, "dwell")
    m20 = sum(draw_dwell(cfg, rng) for _ in range(n)) / n
    m40 = sum(draw_dwell(cfg.with_(velocity=40), rng) for _ in range(n)) / n
    assert m20 == pytest.approx(50, rel=0.02)
    assert m40 == pytest.approx(25, rel=0.02)


def test_nonpositive_velocity_is_a_fault():
    with pytest.raises(ValueError):
        draw_dwell(NetworkConfig(velocity=0), stream(1, 0, 0, "dwell"))


@pytest.mark.parametrize("cell, expected", [(14, {13, 0}), (0, {14, 1})])
def test_ring_wraps(cell, expected):
    rng = stream(1, cell, 0, "target")
    seen = {handoff_target(cell, 15, rng) for _ in range(200)}
    assert seen == expected


def test_single_cell_has_no_neighbour():
    assert handoff_target(0, 1, stream(1, 0, 0, "target")) is None


def test_neighbours_chosen_uniformly():
    rng = stream(77, 5, 0, "target")
    n = 10**4
    counts = Counter(handoff_target(5, 15, rng) for _ in range(n))
    assert set(counts) == {4, 6}
    for c in counts.values():
        assert c / n == pytest.approx(0.5, abs=0.02)
