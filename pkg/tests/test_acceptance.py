"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Full-scale runs (10^7 events per replication); expect several minutes on
one core. Select with ``pytest -m acceptance``; skip with ``-m "not acceptance"``.
"""
from __future__ import annotations

import filecmp
import math
import time
import warnings
from pathlib import Path

import pytest

from _corpus import corpus, corpus_laws
from conftest import record
from ggn_lab import bounds as bd
from ggn_lab import distributions as dl
from ggn_lab import loo, oracles, verify
from ggn_lab.cli import main as cli_main
from ggn_lab.config import load_config
from ggn_lab.experiment import run_replications, run_sweep
from ggn_lab.palm import Views
from ggn_lab.rng import replication_seed
from ggn_lab.sim import engine
from ggn_lab.sim.coupling import run_coupled_dominance
from ggn_lab.sim.model import Mode, QueueModel
from ggn_lab.sim.oracle import LogInconsistent, check_log

pytestmark = pytest.mark.acceptance

ROOT = Path(__file__).resolve().parents[1]
EVENTS = 10_000_000
CORPUS_SEEDS = 20
GRID = [(rho, n) for rho in (0.5, 0.8, 0.95) for n in (1, 4, 16)]
EXP = dl.exponential(1.0)


def _track(model: QueueModel) -> list[int]:
    ok = [j for j in range(model.n) if model.rho_minus(j) < 1.0]
    return ok if ok else [0]


@pytest.fixture(scope="module")
def corpus_runs():
    """Merged modified-mode outputs, 20 seeds x 10^7 events per corpus cell."""
    res = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for c in corpus():
            res[c.name] = run_replications(c.model, c.seeds(CORPUS_SEEDS), EVENTS, None, _track(c.model))
    return res


@pytest.fixture(scope="module")
def logged_runs():
    """50 logged modified runs of 10^6 events cycling through the corpus.

    Logs are checked and dropped one at a time to bound memory.
    """
    cells = corpus()
    res = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for s in range(50):
            c = cells[s % len(cells)]
            out = engine.run(c.model, replication_seed(7, s), 1_000_000, track_loo=range(c.model.n),
                             log_events=True)
            lg = out.log
            dom = loo.check_dominance(out)
            loo_bad = sum(dom.violations.values()) + int((lg.q_loo < lg.q[:, None]).sum())
            try:
                check_log(lg.q0, lg, q_final=out.final_state.q)
                oracle = ""
            except LogInconsistent as exc:
                oracle = f"{c.name}: {exc}"
            res.append({"name": c.name, "events": len(lg), "loo_bad": loo_bad, "oracle": oracle})
            del out, lg
    return res


def _mm_grid(mode: Mode, oracle):
    worst, slow, fails = 0.0, 0.0, []
    for k, (rho, n) in enumerate(GRID):
        m = QueueModel.at_load(EXP, [EXP] * n, rho, mode)
        t0 = time.perf_counter()
        out = engine.run(m, replication_seed(2024, k), EVENTS, track_loo=[])
        dt = time.perf_counter() - t0
        q = Views(out).time_q().estimate()
        z = q.z(oracle(n, rho))
        worst, slow = max(worst, abs(z)), max(slow, dt)
        if abs(z) > 3.0 or dt > 60.0:
            fails.append(f"(rho={rho}, n={n}): z={z:.2f}, {dt:.1f}s")
    return worst, slow, fails


def test_1_modified_mmn_oracle():
    worst, slow, fails = _mm_grid(Mode.MODIFIED, lambda n, rho: oracles.modified_mmn_queue(rho))
    record(1, not fails, f"modified M/M/n vs rho/(1-rho): max|z|={worst:.2f}, slowest cell {slow:.1f}s {fails}")
    assert not fails


def test_2_original_mmn_erlang_c():
    worst, slow, fails = _mm_grid(Mode.ORIGINAL, oracles.mmn_waiting)
    record(2, not fails, f"original M/M/n vs Erlang-C: max|z|={worst:.2f}, slowest cell {slow:.1f}s {fails}")
    assert not fails


def test_3_bar_identities(corpus_runs):
    fails, total = [], 0
    for c in corpus():
        for chk in verify.check_bar_identities(corpus_runs[c.name], c.model):
            if chk.skipped:
                continue
            total += 1
            if not chk.passed:
                fails.append(f"{c.name}:{chk.name} z={chk.z:.2f}")
    record(3, len(fails) <= 1, f"{total} identity checks at z=4, {len(fails)} failed (budget 1) {fails}")
    assert len(fails) <= 1


def test_4_exact_decomposition(corpus_runs):
    # Modified M/M/1 by hand: Palm R_s at completions is the zeroed fired
    # residual, so Gamma_s = -(1 - rho); Gamma_a = 0 by memorylessness.
    rho = 0.8
    lhs = (1.0 - rho) * oracles.modified_mmn_queue(rho)
    rhs = (rho * 1.0 + 1.0 + 1.0 - rho) / 2.0 + (-(1.0 - rho)) - 0.0
    analytic = math.isclose(lhs, rho, rel_tol=1e-12) and math.isclose(rhs, rho, rel_tol=1e-12)
    fails, worst = [], 0.0
    for c in corpus():
        chk = verify.check_key_decomposition(corpus_runs[c.name], c.model)
        worst = max(worst, abs(chk.z))
        if not chk.passed:
            fails.append(f"{c.name} z={chk.z:.2f}")
    g = loo.estimate_gammas(corpus_runs["M/M/1@0.8"])
    mm1 = g.gamma_s[0].covers(-(1.0 - rho), 4.0) and g.gamma_a.covers(0.0, 4.0)
    ok = analytic and mm1 and not fails
    record(4, ok, f"decomposition max|z|={worst:.2f} over {len(corpus())} cells; M/M/1 LHS=RHS={rho} "
                  f"analytic={analytic}, simulated Gammas match={mm1} {fails}")
    assert ok


def test_5_covariance_bounds(corpus_runs):
    fails, regimes = [], set()
    for c in corpus():
        regimes.add(c.heavy)
        g = loo.estimate_gammas(corpus_runs[c.name], c.model)
        for chk in verify.check_covariance_bounds(g, c.model, z=3.0):
            if not chk.passed:
                fails.append(f"{c.name}:{chk.name} z={chk.z:.2f}")
    ok = not fails and regimes == {True, False}
    record(5, ok, f"Gamma_s and -Gamma_a bounds (+3 SE) on {len(corpus())} cells, both regimes="
                  f"{regimes == {True, False}} {fails}")
    assert ok


def test_6_pathwise_dominance(logged_runs):
    loo_bad = sum(r["loo_bad"] for r in logged_runs)
    reps = []
    for s in range(50):
        c = corpus()[s % 12]
        reps.append(run_coupled_dominance(c.model.with_mode(Mode.ORIGINAL), replication_seed(8, s), 1_000_000))
    coup_bad = sum(r.violations + r.negative_gaps for r in reps)
    ok = loo_bad == 0 and coup_bad == 0 and all(r["events"] == 1_000_000 for r in logged_runs)
    record(6, ok, f"{len(logged_runs)} logged runs x 10^6 events: Q_loo<Q violations={loo_bad}; "
                  f"coupling over {len(reps)} seeds x 10^6 arrivals: violations={coup_bad}")
    assert ok


def test_7_queue_length_oracle(logged_runs):
    bad = [r["oracle"] for r in logged_runs if r["oracle"]]
    record(7, not bad, f"{len(logged_runs)} logged modified runs agree exactly with the oracle {bad[:3]}")
    assert not bad


def test_8_uncorrelation():
    fails, worst, n_pairs = [], 0.0, 0
    for S in (EXP, dl.gamma(0.5, 2.0)):
        m = QueueModel.at_load(EXP, [S] * 3, 0.5, Mode.MODIFIED)
        out = engine.run(m, replication_seed(31, 0), EVENTS, track_loo=[0, 1, 2])
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                e = loo.check_uncorrelation(out, i, j)
                n_pairs += 1
                worst = max(worst, abs(e.z()))
                if not e.covers(0.0, verify.Z_EQUALITY):
                    fails.append(f"{dl.to_config(S)} (i={i}, j={j}) z={e.z():.2f}")
    record(8, not fails, f"{n_pairs} (i,j) pairs, z=4 intervals cover 0, max|z|={worst:.2f} {fails}")
    assert not fails


def test_9_bound_validation(corpus_runs):
    fails, n_checks, lg_ratios = [], 0, []
    for c in corpus():
        rep = bd.model_bounds(c.model)
        orig = run_replications(c.model.with_mode(Mode.ORIGINAL), c.seeds(CORPUS_SEEDS), EVENTS, None, [])
        for mode, out in (("original", orig), ("modified", corpus_runs[c.name])):
            q = Views(out).time_q().estimate()
            for e in rep.applicable():
                if e.name == "li_goldberg":
                    continue
                n_checks += 1
                if q.value + 3.0 * q.std_error > e.value:
                    fails.append(f"{c.name}@{mode}: E[Q]={q.value:.4g}+3SE > {e.name}={e.value:.4g}")
        if c.model.homogeneous_servers:
            S = c.model.services[0]
            if bd.Unitized.of(S).r_max <= 10.0:
                ratio = rep.value("li_goldberg") / rep.value("main")
                lg_ratios.append(ratio)
                if not ratio > 1e18:
                    fails.append(f"{c.name}: li_goldberg/main={ratio:.3g}")
    record(9, not fails, f"{n_checks} bound checks (both modes), min li_goldberg/main={min(lg_ratios):.3g} {fails}")
    assert not fails


def test_10_tail_inequality():
    fails, n_checks = [], 0
    for k, law in enumerate(corpus_laws()):
        for chk in verify.check_tail_inequality(law, 1_000_000, seed=replication_seed(41, k), grid_points=50):
            if chk.skipped:
                continue
            n_checks += 1
            if not chk.passed:
                fails.append(f"{dl.to_config(law)}:{chk.name} z={chk.z:.2f}")
    record(10, not fails, f"{n_checks} grid points over {len(corpus_laws())} laws, 10^6 samples each {fails[:3]}")
    assert not fails


def test_11_scaling_table():
    cfg = load_config(ROOT / "configs" / "acceptance.toml")
    rows = run_sweep(cfg)
    plain = [r for r in rows if r["regime"] == ""]
    errs = []
    by_n: dict[int, list[float]] = {}
    for r in plain:
        by_n.setdefault(r["n"], []).append(r["bound_times_one_minus_rho"])
    rhos = sorted({r["rho"] for r in plain})
    const = all(len(set(v)) == 1 for v in by_n.values())
    if not const:
        errs.append(f"mgn*(1-rho) varies: {by_n}")
    if rhos != [0.5, 0.9, 0.99, 0.999]:
        errs.append(f"rho grid {rhos}")
    for tag, power in (("HW", 0.5), ("NDS", 1.0)):
        cells = [r for r in rows if r["regime"] == tag]
        c = cfg.sweep.hw_c if tag == "HW" else cfg.sweep.nds_c
        if len(cells) < 2:
            errs.append(f"no {tag} cells")
        for r in cells:
            expected = bd.Unitized.of(cfg.model.services[0]).r_max * r["n"] ** power / c
            if not math.isclose(r["mgn"], expected, rel_tol=1e-12):
                errs.append(f"{tag} n={r['n']}: {r['mgn']!r} vs {expected!r}")
    record(11, not errs, f"mgn*(1-rho) exactly constant over rho={rhos}; HW bound = C sqrt(n)/c, NDS bound = "
                         f"C n/c to 1e-12 {errs}")
    assert not errs


def test_12_determinism(tmp_path):
    cfg = ROOT / "configs" / "acceptance.toml"
    a, b = tmp_path / "a", tmp_path / "b"
    rcs = [cli_main(["run", "--config", str(cfg), "--out", str(d)]) for d in (a, b)]
    names = sorted(p.name for p in a.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    ok = bool(names) and not mismatch and not errors and sorted(p.name for p in b.iterdir()) == names
    record(12, ok, f"two runs of configs/acceptance.toml: {len(match)} files byte-identical {names}, rc={rcs}")
    assert ok
