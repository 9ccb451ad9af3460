import pytest

from chanres.core import CallClass, NetworkConfig
from chanres.metrics import (
    MetricsWindow,
    blocking_probability,
    dropping_probability,
    mean_handoff_latency,
    mean_sd,
    merge_all,
    system_load,
)

RT_O, NRT_O, RT_H, NRT_H = CallClass.RT_O, CallClass.NRT_O, CallClass.RT_H, CallClass.NRT_H


def window(arrived=(0, 0, 0, 0), refused=(0, 0, 0, 0), reneged=(0, 0, 0, 0), latencies=()):
    return MetricsWindow(0.0, 1.0, list(arrived), [0] * 4, list(refused), list(reneged), list(latencies))


def test_blocking_arithmetic():
    w = window(arrived=(60, 40, 0, 0), refused=(4, 3, 0, 0))
    assert blocking_probability(w) == pytest.approx(0.07)


def test_blocking_undefined_without_arrivals():
    assert blocking_probability(window()) is None


def test_all_refused():
    assert blocking_probability(window(arrived=(3, 2, 0, 0), refused=(3, 2, 0, 0))) == 1.0


def test_reneged_count_as_lost():
    w = window(arrived=(0, 0, 25, 25), refused=(0, 0, 0, 0), reneged=(0, 0, 1, 0))
    assert dropping_probability(w) == pytest.approx(0.02)


def test_dropping_undefined_without_handoffs():
    assert dropping_probability(window(arrived=(5, 5, 0, 0))) is None


def test_per_class_variants_check_class_kind():
    w = window(arrived=(10, 10, 10, 10), refused=(1, 2, 3, 4))
    assert blocking_probability(w, NRT_O) == 0.1
    assert dropping_probability(w, RT_H) == 0.4
    with pytest.raises(ValueError):
        blocking_probability(w, RT_H)


def test_latency():
    assert mean_handoff_latency(window(latencies=[0.0]), 0.1) == pytest.approx(0.1)
    assert mean_handoff_latency(window(latencies=[2.0]), 0.1) == pytest.approx(2.1)
    assert mean_handoff_latency(window(), 0.1) is None


def test_system_load():
    cfg = NetworkConfig()
    assert system_load(cfg) == pytest.approx(47 / 15 * 10 / 60)
    assert system_load(cfg) == pytest.approx(0.52222, abs=1e-5)
    assert system_load(cfg.with_(load_multiplier=2)) == pytest.approx(1.04444, abs=1e-5)
    assert system_load(cfg.with_(arrival_rates=(0.0,) * 4)) == 0


def test_merge_is_order_independent():
    a = window(arrived=(1, 2, 3, 4), refused=(0, 1, 0, 1), latencies=[0.5])
    b = window(arrived=(4, 3, 2, 1), refused=(1, 0, 1, 0), latencies=[0.25])
    ab, ba = merge_all([a, b]), merge_all([b, a])
    assert ab.arrived == ba.arrived == [5, 5, 5, 5]
    assert ab.refused == ba.refused
    assert sorted(ab.latencies) == sorted(ba.latencies)


def test_mean_sd_skips_undefined():
    m, sd, n = mean_sd([1.0, None, 3.0])
    assert (m, n) == (2.0, 2)
    assert sd == pytest.approx(2**0.5)
