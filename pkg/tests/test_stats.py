from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggn_lab import oracles
from ggn_lab.stats import BatchStat, Estimate, InsufficientData, batch_means, merge_estimates


def test_ci95():
    lo, hi = Estimate(1.0, 0.5, 32).ci95
    assert lo == pytest.approx(1.0 - 1.96 * 0.5) and hi == pytest.approx(1.0 + 1.96 * 0.5)


def test_insufficient_batches():
    with pytest.raises(InsufficientData):
        BatchStat(1.0, np.zeros(4)).estimate()
    with pytest.raises(InsufficientData):
        batch_means([1.0])


def test_ratio_matches_pooled_mean():
    num, den = np.array([1.0, 2.0, 3.0, 4.0]), np.array([1.0, 1.0, 2.0, 2.0])
    r = BatchStat.ratio(num, den)
    assert r.value == pytest.approx(10.0 / 6.0)
    assert r.dev.sum() == pytest.approx(0.0, abs=1e-12)


def test_equal_denominators_reduce_to_batch_means():
    x = np.random.default_rng(0).normal(size=32)
    r = BatchStat.ratio(x, np.ones(32))
    b = batch_means(x)
    assert r.value == pytest.approx(b.value) and r.std_error == pytest.approx(b.std_error)


def test_ratio_se_calibration():
    rng = np.random.default_rng(1)
    zs = []
    for _ in range(400):
        den = rng.poisson(50, 32).astype(float) + 1
        num = rng.normal(2.0 * den, np.sqrt(den))
        zs.append(BatchStat.ratio(num, den).estimate().z(2.0))
    assert 0.85 < np.std(zs) < 1.15


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=8, max_size=8), st.floats(0.5, 3.0))
def test_algebra_consistency(xs, c):
    a = BatchStat(1.5, np.array(xs))
    assert (a + a).value == pytest.approx(3.0)
    assert np.allclose((a * c).dev, c * a.dev)
    assert np.allclose((a - a).dev, 0.0)
    assert (a / c).value == pytest.approx(1.5 / c)


def test_merge_estimates_inverse_variance():
    m = merge_estimates([Estimate(1.0, 1.0, 8), Estimate(3.0, 1.0, 8)])
    assert m.value == pytest.approx(2.0) and m.std_error == pytest.approx(1 / math.sqrt(2))


def test_erlang_oracles():
    assert oracles.erlang_b(1, 1.0) == pytest.approx(0.5)
    assert oracles.erlang_c(1, 0.5) == pytest.approx(0.5)
    assert oracles.mmn_waiting(1, 0.5) == pytest.approx(0.5)
    # M/M/2 at rho = 0.5: C = 1/3, Lq = 1/3
    assert oracles.mmn_waiting(2, 0.5) == pytest.approx(1.0 / 3.0)
    assert oracles.modified_mmn_queue(0.8) == pytest.approx(4.0)
