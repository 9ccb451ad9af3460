import math
from fractions import Fraction

import pytest

from chanres.core import NetworkConfig


def erlang_b_factorial(c, rho):
    """Erlang-B straight from the truncated Poisson sum, exact for rational rho."""
    rho = Fraction(rho)
    terms = [rho**k / math.factorial(k) for k in range(c + 1)]
    return terms[-1] / sum(terms)


@pytest.fixture
def small_cfg():
    return NetworkConfig(
        num_cells=3,
        channels_per_cell=8,
        arrival_rates=(1.5, 1.5, 0.9, 0.9),
        mean_call_duration=2.0,
        reservation=(2, 2, 1, 1),
        sim_duration=400.0,
        warmup=20.0,
        control_period=40.0,
        seed=11,
    )
