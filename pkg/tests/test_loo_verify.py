from __future__ import annotations

import warnings

import numpy as np
import pytest

from ggn_lab import distributions as dl
from ggn_lab import loo, verify
from ggn_lab.sim import engine
from ggn_lab.sim.model import Mode, QueueModel
from ggn_lab.stats import InsufficientData

EXP = dl.exponential(1.0)


def run(A, services, rho, seed, events, track=None, mode=Mode.MODIFIED):
    m = QueueModel.at_load(A, list(services), rho, mode)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return m, engine.run(m, seed, events, track_loo=track)


@pytest.fixture(scope="module")
def mm1():
    return run(EXP, [EXP], 0.5, 101, 4_000_000)


@pytest.fixture(scope="module")
def mm3():
    return run(EXP, [EXP] * 3, 0.5, 102, 4_000_000, [0, 1, 2])


def test_mm1_gammas(mm1):
    m, out = mm1
    g = loo.estimate_gammas(out, m)
    assert g.gamma_s[0].covers(-0.5, 4.0) and g.gamma_a.covers(0.0, 4.0)


def test_mm1_decomposition_and_idle_frequency(mm1):
    m, out = mm1
    assert verify.check_key_decomposition(out, m).passed
    e = [c for c in verify.check_bar_identities(out, m) if c.name.startswith("e:")][0]
    assert e.passed and e.rhs_value == pytest.approx(0.5)


def test_mmn_gamma_a_vanishes():
    m, out = run(EXP, [EXP] * 4, 0.7, 103, 2_000_000)
    assert loo.estimate_gammas(out, m).gamma_a.covers(0.0, 4.0)


def test_md10_covariance_bound():
    m, out = run(EXP, [dl.deterministic(1.0)] * 10, 0.5, 104, 2_000_000)
    bs, _ = verify.covariance_bound_values(m)
    assert bs[0] == pytest.approx(0.1 * 0.5)
    checks = verify.check_covariance_bounds(loo.estimate_gammas(out, m), m)
    assert [c.name for c in checks] == ["gamma_s[sym]<=bound", "-gamma_a<=bound"]
    assert all(c.passed for c in checks)


def test_symmetrized_gamma_matches_mean():
    m, out = run(EXP, [EXP] * 3, 0.6, 112, 500_000)
    g = loo.estimate_gammas(out, m)
    assert g.gamma_s_sym.value == pytest.approx(np.mean([e.value for e in g.gamma_s]))
    het = QueueModel.at_load(EXP, [EXP, dl.exponential(2.0)], 0.6)
    assert loo.estimate_gammas(engine.run(het, 1, 200_000), het).gamma_s_sym is None


def test_gamma05_heavy_regime_bound_value():
    m = QueueModel.at_load(EXP, [dl.gamma(0.5, 2.0)] * 4, 0.95)
    bs, ba = verify.covariance_bound_values(m)
    assert bs[0] == pytest.approx(0.05 * (2.0 - 1.5)) and ba == pytest.approx(0.0)


def test_uncorrelation(mm3):
    m, out = mm3
    for i, j in [(0, 1), (1, 2), (2, 0)]:
        assert loo.check_uncorrelation(out, i, j).covers(0.0, 4.0)
    with pytest.raises(loo.PreconditionError):
        loo.check_uncorrelation(out, 1, 1)


def test_uncorrelation_preconditions():
    m, out = run(EXP, [dl.deterministic(1.0)] * 3, 0.5, 105, 200_000, [0, 1, 2])
    with pytest.raises(loo.PreconditionError):
        loo.check_uncorrelation(out, 0, 1)
    m, out = run(EXP, [EXP] * 2, 0.8, 106, 200_000, [0, 1])
    with pytest.raises(loo.PreconditionError):
        loo.check_uncorrelation(out, 0, 1)


def test_dominance_check(mm3):
    _, out = mm3
    d = loo.check_dominance(out)
    assert d.passed and min(d.min_margin.values()) >= 0


def test_original_mode_rejected():
    m, out = run(EXP, [EXP] * 2, 0.5, 107, 100_000, mode=Mode.ORIGINAL)
    with pytest.raises(loo.PreconditionError):
        loo.estimate_gammas(out, m)


def test_few_batches_rejected():
    m = QueueModel.at_load(EXP, [EXP], 0.5)
    out = engine.Simulator(m, 1, 10_000, n_batches=4).run()
    with pytest.raises(InsufficientData):
        loo.estimate_gammas(out, m)


def test_bar_examples():
    m, out = run(EXP, [EXP] * 2, 0.5, 108, 2_000_000)
    a = [c for c in verify.check_bar_identities(out, m) if c.name == "a:time_avg_Rs[1]"][0]
    assert a.rhs_value == pytest.approx(1.0) and a.passed
    m, out = run(EXP, [dl.deterministic(1.0)] * 2, 0.5, 109, 2_000_000)
    a = [c for c in verify.check_bar_identities(out, m) if c.name == "a:time_avg_Rs[0]"][0]
    assert a.rhs_value == pytest.approx(0.5) and a.passed


@pytest.mark.parametrize("A,S,n,rho", [
    (EXP, EXP, 5, 0.8),
    (dl.hyperexponential([0.3, 0.7], [0.5, 2.0]), EXP, 3, 0.7),
    (EXP, dl.gamma(0.5, 2.0), 4, 0.9),
])
def test_verify_output_passes(A, S, n, rho):
    m, out = run(A, [S] * n, rho, 110, 3_000_000)
    rep = verify.verify_output(out)
    assert rep.passed, [(c.name, c.z) for c in rep.failures()]


def test_heterogeneous_verify():
    m, out = run(EXP, [dl.exponential(1.0), dl.exponential(2.0), dl.exponential(3.0)], 0.7, 111, 3_000_000,
                 [0, 1, 2])
    rep = verify.verify_output(out)
    assert rep.passed, [(c.name, c.z) for c in rep.failures()]
    assert any(c.skipped for c in rep.checks)  # rho_-j >= 1 for the fastest server


def test_end_to_end_bounds():
    m = QueueModel.at_load(EXP, [dl.gamma(0.5, 2.0)] * 8, 0.8)
    rep = verify.validate_bounds_end_to_end(m, [1, 2], 1_000_000)
    assert rep.passed
    assert {c.name.split("@")[1] for c in rep.checks} == {"original", "modified"}


def test_tail_inequality_uniform():
    checks = verify.check_tail_inequality(dl.uniform(0.5, 1.5), 200_000, seed=3)
    assert len(checks) == 50 and all(c.passed for c in checks)


def test_se_decays_like_inverse_sqrt():
    m = QueueModel.at_load(EXP, [EXP] * 2, 0.7)
    slope = verify.se_decay_slope(m, 5, [50_000, 200_000, 800_000, 3_200_000], reps=8)
    assert -0.6 <= slope <= -0.4


def test_gamma_csv(mm1):
    m, out = mm1
    lines = verify.gamma_csv(loo.estimate_gammas(out, m), m).splitlines()
    assert lines[0] == "quantity,j,value,se,ci_lo,ci_hi,bound,pass" and len(lines) == 4


def test_conditional_cells(mm3):
    _, out = mm3
    res = loo.conditional_residual_checks(out)
    assert res and all(c.passed for c in res)
    assert np.all([c.samples >= loo.MIN_CELL_SAMPLES for c in res])
