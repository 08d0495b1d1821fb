"""Random streams and seed derivation.

Every simulation process (arrivals, each server, routing, initialization)
owns an independent numpy ``Generator`` spawned from one integer seed, so
a replication is reproducible from ``(model, seed)`` alone.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def replication_seed(master_seed: int, r: int) -> int:
    """Seed of replication ``r``: ``mix64(mix64(master) ^ r)``, kept to 63 bits."""
    return mix64(mix64(master_seed & _MASK64) ^ (r & _MASK64)) >> 1


class RandomStream:
    """A seeded stream of variates, exclusively owned by one simulation."""

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def uniform(self) -> float:
        return float(self.generator.random())

    def spawn(self, k: int) -> list["RandomStream"]:
        return [RandomStream(s) for s in self._seq.spawn(k)]


def process_streams(seed: int, n_servers: int) -> dict[str, object]:
    """Independent streams for one run: arrival, one per server, routing, init."""
    root = RandomStream(seed)
    kids = root.spawn(n_servers + 3)
    return {
        "arrival": kids[0],
        "servers": kids[1:n_servers + 1],
        "routing": kids[n_servers + 1],
        "init": kids[n_servers + 2],
    }
