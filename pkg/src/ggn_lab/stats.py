"""Batch-means estimates with linearized ratio errors.

Every estimator is carried as its point value plus one deviation per batch
(the influence of that batch after linearizing ratios). Sums, differences
and products of estimators built from the same run then get standard errors
that account for their correlation, which is what the identity checks need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

Z95 = 1.96
MIN_BATCHES = 8


class InsufficientData(ValueError):
    """Too few post-warmup batches (or events) for a batch-means estimate."""


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n_batches: int

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.value - Z95 * self.std_error, self.value + Z95 * self.std_error)

    def z(self, target: float = 0.0) -> float:
        """Signed distance from ``target`` in standard errors."""
        d = self.value - target
        if self.std_error == 0.0:
            return 0.0 if d == 0.0 else math.copysign(math.inf, d)
        return d / self.std_error

    def covers(self, target: float, z: float = Z95) -> bool:
        return abs(self.value - target) <= z * self.std_error

    def to_dict(self) -> dict[str, float]:
        lo, hi = self.ci95
        return {"value": self.value, "se": self.std_error, "n_batches": self.n_batches,
                "ci_lo": lo, "ci_hi": hi}


class BatchStat:
    """Point value with per-batch linearized deviations; supports + - * /."""

    __slots__ = ("value", "dev")

    def __init__(self, value: float, dev: np.ndarray):
        self.value = float(value)
        self.dev = np.asarray(dev, dtype=float)

    @classmethod
    def ratio(cls, num: np.ndarray, den: np.ndarray) -> "BatchStat":
        """sum(num) / sum(den), the self-weighting estimator over batches."""
        num = np.asarray(num, dtype=float)
        den = np.asarray(den, dtype=float)
        D = den.sum()
        if D <= 0:
            return cls(math.nan, np.full(num.shape, math.nan))
        v = num.sum() / D
        return cls(v, (num - v * den) / (D / den.size))

    @classmethod
    def constant(cls, c: float, nb: int) -> "BatchStat":
        return cls(c, np.zeros(nb))

    def _lift(self, other) -> "BatchStat":
        return other if isinstance(other, BatchStat) else BatchStat.constant(float(other), self.dev.size)

    def __add__(self, other):
        o = self._lift(other)
        return BatchStat(self.value + o.value, self.dev + o.dev)

    __radd__ = __add__

    def __neg__(self):
        return BatchStat(-self.value, -self.dev)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        return BatchStat(self.value * o.value, self.value * o.dev + o.value * self.dev)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        v = self.value / o.value
        return BatchStat(v, (self.dev - v * o.dev) / o.value)

    @property
    def n_batches(self) -> int:
        return int(self.dev.size)

    @property
    def std_error(self) -> float:
        nb = self.dev.size
        if nb < 2:
            return math.inf
        return float(np.std(self.dev, ddof=1) / math.sqrt(nb))

    def estimate(self, min_batches: int = MIN_BATCHES) -> Estimate:
        if self.dev.size < min_batches:
            raise InsufficientData(f"need at least {min_batches} batches, got {self.dev.size}")
        return Estimate(self.value, self.std_error, self.dev.size)


def batch_means(values: Sequence[float]) -> Estimate:
    """Plain batch means of per-batch values."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise InsufficientData("need at least two batches")
    return Estimate(float(x.mean()), float(np.std(x, ddof=1) / math.sqrt(x.size)), int(x.size))


def merge_estimates(estimates: Sequence[Estimate]) -> Estimate:
    """Inverse-variance weighted pool of independent estimates of one quantity."""
    ests = list(estimates)
    if not ests:
        raise InsufficientData("nothing to merge")
    if any(e.std_error == 0 for e in ests):
        zero = [e for e in ests if e.std_error == 0]
        return Estimate(float(np.mean([e.value for e in zero])), 0.0, sum(e.n_batches for e in ests))
    w = np.array([1.0 / e.std_error ** 2 for e in ests])
    v = np.array([e.value for e in ests])
    return Estimate(float((w * v).sum() / w.sum()), float(1.0 / math.sqrt(w.sum())),
                    sum(e.n_batches for e in ests))
