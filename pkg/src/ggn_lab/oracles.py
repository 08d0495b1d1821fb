"""Independent closed forms used as simulation oracles."""
from __future__ import annotations


def erlang_b(n: int, a: float) -> float:
    """Blocking probability of M/M/n/n with offered load ``a`` (stable recursion)."""
    b = 1.0
    for k in range(1, n + 1):
        b = a * b / (k + a * b)
    return b


def erlang_c(n: int, a: float) -> float:
    """Probability of waiting in M/M/n with offered load ``a = lam / mu < n``."""
    if a >= n:
        return 1.0
    b = erlang_b(n, a)
    return n * b / (n - a * (1.0 - b))


def mmn_waiting(n: int, rho: float) -> float:
    """Mean number waiting in the original M/M/n queue at per-server load ``rho``."""
    return erlang_c(n, rho * n) * rho / (1.0 - rho)


def modified_mmn_queue(rho: float) -> float:
    """Mean queue of the modified M/M/n: a birth-death chain with rates lam and n mu."""
    return rho / (1.0 - rho)
