from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggn_lab import distributions as dl
from ggn_lab.rng import RandomStream, replication_seed


def _mean_within(x: np.ndarray, target: float, z: float = 3.0) -> bool:
    return abs(x.mean() - target) <= z * x.std(ddof=1) / math.sqrt(x.size)


def _rng(seed: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# -------------------------------------------------------------- sampling

def test_deterministic_sample_is_constant():
    s = RandomStream(1)
    assert all(dl.sample(dl.deterministic(2.0), s) == 2.0 for _ in range(10))


def test_same_seed_same_draw():
    e = dl.exponential(1.0)
    assert dl.sample(e, RandomStream(42)) == dl.sample(e, RandomStream(42))


def test_gamma_sample_mean():
    x = dl.sample_block(dl.gamma(0.5, 2.0), _rng(1), 1_000_000)
    assert _mean_within(x, 1.0)


@pytest.mark.parametrize("spec", [
    dl.exponential(2.0), dl.erlang(3, 1.5), dl.uniform(0.5, 1.5), dl.hyperexponential([0.3, 0.7], [0.5, 2.0]),
    dl.phase_type([0.6, 0.4], [[-2.0, 1.0], [0.0, -0.5]]), dl.bounded_empirical([1.0, 2.0, 4.0]),
])
def test_sample_mean_matches_moment(spec):
    x = dl.sample_block(spec, _rng(3), 400_000)
    assert _mean_within(x, dl.moments(spec).mean, 4.0)


# -------------------------------------------------------------- moments

def test_moments_examples():
    m = dl.moments(dl.exponential(1.0))
    assert (m.mean, m.second_moment, m.variance) == pytest.approx((1.0, 2.0, 1.0))
    d = dl.moments(dl.deterministic(3.0))
    assert (d.mean, d.variance) == pytest.approx((3.0, 0.0))
    e = dl.moments(dl.erlang(2, 2.0))
    assert (e.mean, e.variance) == pytest.approx((1.0, 0.5))


def test_phase_type_moments_match_exponential():
    m = dl.moments(dl.phase_type([1.0], [[-2.0]]))
    assert (m.mean, m.second_moment) == pytest.approx((0.5, 0.5))


# -------------------------------------------------------------- mean residual

def test_mean_residual_examples():
    assert dl.mean_residual(dl.exponential(2.0), 5.0) == pytest.approx(0.5)
    assert dl.mean_residual(dl.deterministic(1.0), 0.25) == pytest.approx(0.75)


@pytest.mark.parametrize("spec,t", [
    (dl.deterministic(1.0), 1.5), (dl.uniform(0.0, 2.0), 3.0), (dl.bounded_empirical([1.0, 2.0]), 2.5),
])
def test_mean_residual_beyond_support(spec, t):
    with pytest.raises(dl.QueryBeyondSupport):
        dl.mean_residual(spec, t)


@pytest.mark.parametrize("spec", [
    dl.gamma(0.5, 2.0), dl.gamma(3.0, 0.5), dl.erlang(2, 1.0), dl.uniform(0.5, 1.5),
    dl.hyperexponential([0.3, 0.7], [0.5, 2.0]),
])
@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 1.4])
def test_analytic_mean_residual_matches_numeric(spec, t):
    assert dl.mean_residual(spec, t) == pytest.approx(dl.numeric_mean_residual(spec, t), rel=1e-7)


# -------------------------------------------------------------- residual profile

def test_residual_profile_examples():
    assert dl.residual_profile(dl.unitize(dl.gamma(0.5, 1.0))).r_sup == pytest.approx(2.0)
    assert dl.residual_profile(dl.unitize(dl.gamma(4.0, 1.0))).r_sup == pytest.approx(1.0)
    p = dl.residual_profile(dl.exponential(1.0))
    assert (p.r_sup, p.r_inf) == pytest.approx((1.0, 1.0))


@pytest.mark.parametrize("spec", [dl.erlang(1, 2.0), dl.erlang(3, 1.0), dl.deterministic(2.0), dl.uniform(0.0, 3.0)])
def test_nbue_residual_bounded_by_mean(spec):
    assert dl.residual_profile(spec).r_sup <= dl.moments(spec).mean * (1 + 1e-8)


def test_bounded_arrival_rmin_is_zero():
    assert dl.residual_profile(dl.uniform(0.5, 1.5)).r_inf == 0.0


def test_numeric_profile_close_to_analytic():
    spec = dl.phase_type([0.6, 0.4], [[-2.0, 1.0], [0.0, -0.5]])
    p = dl.residual_profile(spec)
    assert p.method == "numeric"
    assert math.isfinite(p.r_sup) and p.r_sup >= p.r_inf > 0


# -------------------------------------------------------------- unitize / lattice

def test_unitize_examples():
    assert dl.unitize(dl.exponential(2.0)) == dl.exponential(1.0)
    assert dl.unitize(dl.deterministic(5.0)) == dl.deterministic(1.0)
    g = dl.unitize(dl.gamma(0.5, 4.0))
    assert g.family is dl.Family.GAMMA
    assert (g["shape"], g["scale"]) == pytest.approx((0.5, 2.0))


def test_lattice_examples():
    assert dl.is_lattice(dl.deterministic(1.0))
    assert not dl.is_lattice(dl.exponential(1.0))
    assert dl.is_lattice(dl.bounded_empirical([1.0, 2.0, 3.0]))
    assert not dl.is_lattice(dl.bounded_empirical([1.0, math.sqrt(2.0)]))


# -------------------------------------------------------------- equilibrium

def test_equilibrium_examples():
    rng = _rng(5)
    assert _mean_within(dl.equilibrium_block(dl.exponential(1.0), rng, 1_000_000), 1.0)
    x = dl.equilibrium_block(dl.deterministic(1.0), rng, 1_000_000)
    assert x.min() >= 0.0 and x.max() <= 1.0 and _mean_within(x, 0.5)
    g = dl.unitize(dl.gamma(2.0, 1.0))
    assert _mean_within(dl.equilibrium_block(g, rng, 1_000_000), 0.75)


@pytest.mark.parametrize("spec", [
    dl.uniform(0.5, 1.5), dl.hyperexponential([0.3, 0.7], [0.5, 2.0]), dl.gamma(0.5, 2.0),
    dl.phase_type([0.6, 0.4], [[-2.0, 1.0], [0.0, -0.5]]), dl.bounded_empirical([1.0, 2.0, 4.0]),
])
def test_equilibrium_mean_is_second_over_twice_mean(spec):
    m = dl.moments(spec)
    x = dl.equilibrium_block(spec, _rng(6), 400_000)
    assert _mean_within(x, m.second_moment / (2 * m.mean), 4.0)


# -------------------------------------------------------------- config round trip and validation

@pytest.mark.parametrize("spec", [
    dl.exponential(1.5), dl.gamma(0.5, 2.0), dl.erlang(3, 2.0), dl.deterministic(1.0), dl.uniform(0.5, 1.5),
    dl.hyperexponential([0.3, 0.7], [0.5, 2.0]), dl.phase_type([0.6, 0.4], [[-2.0, 1.0], [0.0, -0.5]]),
    dl.bounded_empirical([1.0, 2.0]),
])
def test_config_round_trip(spec):
    assert dl.from_config(dl.to_config(spec)) == spec


@pytest.mark.parametrize("block", [
    'family = "weibull", shape = 1.0', 'family = "gamma", shape = 0.5', 'family = "exponential", rate = -1.0',
    'family = "exponential", rate = 1.0, extra = 2', 'family = "uniform", low = 2.0, high = 1.0',
    'family = "hyperexponential", weights = [0.5, 0.6], rates = [1.0, 2.0]',
])
def test_invalid_blocks(block):
    with pytest.raises(dl.InvalidDistribution):
        dl.from_config(block)


# -------------------------------------------------------------- properties

@settings(max_examples=40, deadline=None)
@given(shape=st.floats(0.2, 8.0), scale=st.floats(0.1, 10.0), c=st.floats(0.1, 10.0))
def test_scaling_preserves_unitized_law(shape, scale, c):
    g = dl.gamma(shape, scale)
    a, b = dl.unitize(g), dl.unitize(dl.scaled(g, c))
    assert a["shape"] == pytest.approx(b["shape"]) and a["scale"] == pytest.approx(b["scale"])
    assert dl.moments(dl.scaled(g, c)).mean == pytest.approx(c * dl.moments(g).mean)


@settings(max_examples=40, deadline=None)
@given(k=st.integers(1, 6), rate=st.floats(0.1, 10.0), t=st.floats(0.0, 5.0))
def test_erlang_mean_residual_nonincreasing(k, rate, t):
    e = dl.erlang(k, rate)
    assert dl.mean_residual(e, t + 0.1) <= dl.mean_residual(e, t) + 1e-12


@settings(max_examples=30, deadline=None)
@given(master=st.integers(0, 2**63), r=st.integers(0, 1000))
def test_replication_seeds_distinct(master, r):
    assert replication_seed(master, r) != replication_seed(master, r + 1)
    assert 0 <= replication_seed(master, r) < 2**63
