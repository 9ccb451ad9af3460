"""Closed-form teletraffic oracles for the pure-loss, disjoint-pool regime."""

from __future__ import annotations

import math

from .core import CostWeights, ReservationVector


def erlang_b(c: int, rho: float) -> float:
    """Blocking probability of an M/M/c/c system offered ``rho`` Erlangs."""
    if c < 0 or rho < 0:
        raise ValueError("erlang_b needs c ≥ 0 and rho ≥ 0")
    b = 1.0
    for n in range(1, int(c) + 1):
        b = rho * b / (n + rho * b)
    return b


def mmck_blocking(c: int, k: int, rho: float) -> float:
    """Probability an arrival finds an M/M/c/K system full."""
    if c < 1:
        raise ValueError("mmck_blocking needs c ≥ 1")
    if k < c:
        raise ValueError("system capacity K must be ≥ c")
    if rho < 0:
        raise ValueError("rho must be ≥ 0")
    if rho == 0:
        return 0.0
    # unnormalised p_n / p_0, built with ratios to avoid factorials
    terms = [1.0]
    for n in range(1, k + 1):
        terms.append(terms[-1] * rho / min(n, c))
    return terms[-1] / math.fsum(terms)


# pool index -> weight attribute
_WEIGHT = ("w_b_nrt", "w_b_rt", "w_d_nrt", "w_d_rt")


def disjoint_cost(rv, loads, weights: CostWeights, delay: float = 0.0, channels: int | None = None) -> float:
    """Analytic controller cost of ``rv`` when each class owns its pool alone.

    ``loads`` are per-cell Erlangs in pool order. A class with no load has no
    arrivals, so its loss is undefined and contributes nothing. The latency
    term is constant because no call ever waits.
    """
    if channels is not None and sum(rv) != channels:
        raise ValueError("disjoint_cost applies only with no shared pool")
    total = 0.0
    for k, (pool, rho) in enumerate(zip(rv, loads)):
        if rho > 0:
            total += getattr(weights, _WEIGHT[k]) * erlang_b(pool, rho)
    return total + weights.w_l * min(delay / weights.l_ref, 1.0)


def lattice(channels: int, stride: int) -> list[ReservationVector]:
    """All four-way splits of ``channels`` into multiples of ``stride``.

    Channels left over when ``stride`` does not divide C go to the last
    pool, so every member still sums to C. Ordered lexicographically.
    """
    if stride < 1:
        raise ValueError("stride must be ≥ 1")
    units, rest = divmod(channels, stride)
    out = []
    for a in range(units + 1):
        for b in range(units - a + 1):
            for c in range(units - a - b + 1):
                d = units - a - b - c
                out.append(ReservationVector(a * stride, b * stride, c * stride, d * stride + rest))
    out.sort()
    return out


def brute_force_optimum(channels: int, loads, weights: CostWeights, stride: int = 1, delay: float = 0.0):
    """Cheapest lattice vector by exhaustive search; ties go to the smallest vector.

    Returns ``(rv, cost)``.
    """
    cands = lattice(channels, stride)
    if not cands:
        raise ValueError("empty reservation lattice")
    best, best_cost = None, math.inf
    for rv in cands:
        j = disjoint_cost(rv, loads, weights, delay)
        if j < best_cost:
            best, best_cost = rv, j
    return best, best_cost

