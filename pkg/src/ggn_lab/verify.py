"""Identity and inequality checks on simulation output.

Equalities are judged at ``z = 4`` and one-sided bounds at ``z = 3``. Each
equality is evaluated on per-batch differences of its two sides, so
correlated estimators (both sides from the same run) get the right error.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ggn_lab import bounds as bd
from ggn_lab import distributions as dl
from ggn_lab import loo
from ggn_lab.palm import Views
from ggn_lab.rng import replication_seed
from ggn_lab.sim import engine
from ggn_lab.sim.engine import SimOutput
from ggn_lab.sim.model import Mode, QueueModel
from ggn_lab.stats import BatchStat, Estimate, InsufficientData, MIN_BATCHES

Z_EQUALITY = 4.0
Z_BOUND = 3.0
EQUALITY, UPPER, LOWER = "Equality", "UpperBound", "LowerBound"
MAX_PAIRS_FULL = 4  # all server pairs up to this n, a ring of pairs beyond


@dataclass
class IdentityCheck:
    name: str
    kind: str
    lhs: Estimate | None
    rhs: float | Estimate | None
    se: float
    tolerance: float
    passed: bool
    skip_reason: str = ""

    @property
    def skipped(self) -> bool:
        return bool(self.skip_reason)

    @property
    def rhs_value(self) -> float:
        if self.rhs is None:
            return math.nan
        return self.rhs.value if isinstance(self.rhs, Estimate) else float(self.rhs)

    @property
    def z(self) -> float:
        if self.lhs is None:
            return math.nan
        d = self.lhs.value - self.rhs_value
        if self.se == 0:
            return 0.0 if d == 0 else math.copysign(math.inf, d)
        return d / self.se


def skipped(name: str, kind: str, reason: str, tol: float = Z_EQUALITY) -> IdentityCheck:
    return IdentityCheck(name, kind, None, None, math.nan, tol, True, reason)


def equality(name: str, lhs: BatchStat, rhs: float | BatchStat, z: float = Z_EQUALITY) -> IdentityCheck:
    diff = lhs - rhs
    se = diff.std_error
    lhs_e = lhs.estimate(2)
    rhs_v = rhs.estimate(2) if isinstance(rhs, BatchStat) else float(rhs)
    return IdentityCheck(name, EQUALITY, lhs_e, rhs_v, se, z, abs(diff.value) <= z * se)


def upper(name: str, lhs: BatchStat | Estimate, bound: float, z: float = Z_BOUND) -> IdentityCheck:
    e = lhs.estimate(2) if isinstance(lhs, BatchStat) else lhs
    return IdentityCheck(name, UPPER, e, float(bound), e.std_error, z, e.value - bound <= z * e.std_error)


def lower(name: str, lhs: BatchStat | Estimate, bound: float, z: float = Z_BOUND) -> IdentityCheck:
    e = lhs.estimate(2) if isinstance(lhs, BatchStat) else lhs
    return IdentityCheck(name, LOWER, e, float(bound), e.std_error, z, bound - e.value <= z * e.std_error)


@dataclass
class VerifyReport:
    model: QueueModel
    horizon_events: int
    checks: list[IdentityCheck] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.skipped)

    def failures(self) -> list[IdentityCheck]:
        return [c for c in self.checks if not c.skipped and not c.passed]

    def to_csv(self, header: str = "") -> str:
        return checks_csv(self.checks, header)


def _fmt(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def checks_csv(checks: Sequence[IdentityCheck], header: str = "") -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "kind", "lhs", "rhs", "se", "z", "pass", "skip_reason"])
    for c in checks:
        w.writerow([c.name, c.kind, _fmt(c.lhs.value if c.lhs else math.nan), _fmt(c.rhs_value),
                    _fmt(c.se), _fmt(c.z), "skip" if c.skipped else str(c.passed).lower(), c.skip_reason])
    return buf.getvalue()


def _pairs(n: int) -> list[tuple[int, int]]:
    if n < 2:
        return []
    if n <= MAX_PAIRS_FULL:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    return [(i, (i + 1) % n) for i in range(n)]


def _require(out: SimOutput) -> None:
    if out.model.mode is not Mode.MODIFIED:
        raise loo.PreconditionError("identity checks need a modified-mode run")
    if out.n_batches < MIN_BATCHES:
        raise InsufficientData(f"need at least {MIN_BATCHES} post-warmup batches, got {out.n_batches}")


def check_bar_identities(out: SimOutput, model: QueueModel | None = None) -> list[IdentityCheck]:
    """Renewal and event-average identities (a)-(f) of the modified queue."""
    model = model or out.model
    _require(out)
    if model.rho >= 1.0:
        raise bd.Unstable("identities need rho < 1")
    v = Views(out)
    n = model.n
    mu = model.service_rates
    lam = model.arrival_rate
    ms = [dl.moments(s) for s in model.services]
    ma = dl.moments(model.arrival)
    eq_rs = [float(mu[i] * ms[i].second_moment / 2.0) for i in range(n)]
    eq_ra = lam * ma.second_moment / 2.0
    comp = v.completions()
    checks = []
    for i in range(n):
        checks.append(equality(f"a:time_avg_Rs[{i}]", v.time_rs(i), eq_rs[i]))
    checks.append(equality("b:time_avg_Ra", v.time_ra(), eq_ra))
    for i, j in _pairs(n):
        checks.append(equality(f"c:Es{i}[Rs{j}]+Es{j}[Rs{i}]", v.palm_rs([i + 1], j) + v.palm_rs([j + 1], i),
                               eq_rs[i] + eq_rs[j]))
    for i in range(n):
        checks.append(equality(f"d:Es{i}[Ra]+Ea[Rs{i}]", v.palm_sc([i + 1], 3) + v.palm_rs([0], i),
                               eq_rs[i] + eq_ra))
    checks.append(equality("e:Ps[Q=0]", v.palm_sc(comp, 1), 1.0 - model.rho))
    for j in (int(x) for x in out.track_loo):
        name = f"f:Ps[Qloo{j}=0,i!={j}]"
        if model.rho_minus(j) >= 1.0:
            checks.append(skipped(name, EQUALITY, f"leave-one-out system without server {j} is unstable "
                                                  f"(rho_-j={model.rho_minus(j):.4g})"))
            continue
        checks.append(equality(name, loo.idle_loo_stat(out, j), loo.idle_loo_target(model, j)))
    return checks


def decomposition_stat(out: SimOutput, model: QueueModel, gammas: loo.GammaEstimates) -> tuple[BatchStat, float]:
    """Per-batch LHS and the constant part of the RHS of the exact decomposition."""
    rho = model.rho
    v = Views(out)
    ua = bd.Unitized.of(model.arrival)
    w = model.service_rates / model.total_rate
    var_s = sum(float(w[j]) * bd.Unitized.of(model.services[j]).variance for j in range(model.n))
    const = (rho * ua.variance + var_s + 1.0 - rho) / 2.0
    return v.time_q() * (1.0 - rho), const


def check_key_decomposition(out: SimOutput, model: QueueModel | None = None,
                            gammas: loo.GammaEstimates | None = None) -> IdentityCheck:
    """(1-rho) E[Q] = (rho Var(Lam A) + sum_j w_j Var(mu_j S_j) + 1 - rho)/2 + sum_j Gamma_sj - Gamma_a."""
    model = model or out.model
    _require(out)
    gammas = gammas or loo.estimate_gammas(out, model)
    lhs, const = decomposition_stat(out, model, gammas)
    rhs = gammas.gamma_s_sum() - gammas.stats["gamma_a"] + const
    return equality("decomposition", lhs, rhs)


def covariance_bound_values(model: QueueModel) -> tuple[list[float], float]:
    rho = model.rho
    w = model.service_rates / model.total_rate
    s = []
    for j, spec in enumerate(model.services):
        u = bd.Unitized.of(spec)
        s.append(min(1.0 - rho, float(w[j])) * (u.r_max - u.second / 2.0))
    ua = bd.Unitized.of(model.arrival)
    return s, (1.0 - rho) * (ua.second / 2.0 - ua.r_min)


def check_covariance_bounds(gammas: loo.GammaEstimates, model: QueueModel, z: float = Z_BOUND) -> list[IdentityCheck]:
    """Homogeneous servers are exchangeable, so Gamma_s1 is estimated by the mean over j."""
    bs, ba = covariance_bound_values(model)
    if gammas.gamma_s_sym is not None:
        checks = [upper("gamma_s[sym]<=bound", gammas.gamma_s_sym, bs[0], z)]
    else:
        checks = [upper(f"gamma_s[{j}]<=bound", g, bs[j], z) for j, g in enumerate(gammas.gamma_s)]
    neg = Estimate(-gammas.gamma_a.value, gammas.gamma_a.std_error, gammas.gamma_a.n_batches)
    checks.append(upper("-gamma_a<=bound", neg, ba, z))
    return checks


def gamma_rows(gammas: loo.GammaEstimates, model: QueueModel, z: float = Z_BOUND) -> list[list]:
    """Rows ``quantity,j,value,se,ci_lo,ci_hi,bound,pass``."""
    bs, ba = covariance_bound_values(model)
    rows = []
    for j, g in enumerate(gammas.gamma_s):
        lo, hi = g.ci95
        rows.append(["gamma_s", j, g.value, g.std_error, lo, hi, bs[j], g.value <= bs[j] + z * g.std_error])
    if gammas.gamma_s_sym is not None:
        g = gammas.gamma_s_sym
        lo, hi = g.ci95
        rows.append(["gamma_s", "sym", g.value, g.std_error, lo, hi, bs[0], g.value <= bs[0] + z * g.std_error])
    g = gammas.gamma_a
    lo, hi = g.ci95
    rows.append(["gamma_a", "", g.value, g.std_error, lo, hi, -ba, -g.value <= ba + z * g.std_error])
    return rows


def gamma_csv(gammas: loo.GammaEstimates, model: QueueModel, header: str = "") -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "j", "value", "se", "ci_lo", "ci_hi", "bound", "pass"])
    for r in gamma_rows(gammas, model):
        w.writerow([r[0], r[1]] + [repr(float(x)) for x in r[2:7]] + [str(bool(r[7])).lower()])
    return buf.getvalue()


def check_conditional_residuals(out: SimOutput, z: float = Z_EQUALITY) -> list[IdentityCheck]:
    res = []
    for c in loo.conditional_residual_checks(out, z):
        name = f"cell:{c.quantity}[{c.j}]|{loo.CELL_NAMES[c.cell]}@{c.measure}"
        if c.quantity == "mu R_s":
            res.append(upper(name, c.estimate, c.bound, z))
        else:
            res.append(lower(name, c.estimate, c.bound, z))
    return res


def check_uncorrelation_all(out: SimOutput, z: float = Z_EQUALITY) -> list[IdentityCheck]:
    model = out.model
    res = []
    for j in (int(x) for x in out.track_loo):
        for i in range(model.n):
            if i == j:
                continue
            name = f"uncorrelation[i={i},j={j}]"
            try:
                st = loo.uncorrelation_stat(out, i, j)
            except loo.PreconditionError as exc:
                res.append(skipped(name, EQUALITY, str(exc)))
                continue
            res.append(equality(name, st, 0.0, z))
    return res


def verify_output(out: SimOutput, with_cells: bool = True) -> VerifyReport:
    """All run-level checks for one (possibly merged) modified-mode output."""
    model = out.model
    rep = VerifyReport(model, out.horizon_events)
    rep.checks.extend(check_bar_identities(out, model))
    g = loo.estimate_gammas(out, model)
    rep.checks.append(check_key_decomposition(out, model, g))
    rep.checks.extend(check_covariance_bounds(g, model))
    dom = loo.check_dominance(out) if out.track_loo.size else None
    if dom is not None:
        for j, m in dom.min_margin.items():
            rep.checks.append(IdentityCheck(f"loo_dominance[{j}]", LOWER, Estimate(float(m), 0.0, out.n_batches),
                                            0.0, 0.0, 0.0, m >= 0 and dom.violations[j] == 0))
    if with_cells:
        rep.checks.extend(check_conditional_residuals(out))
    rep.extra["gammas"] = g
    return rep


@dataclass
class BoundValidation:
    mode: str
    bound: str
    simulated: Estimate
    bound_value: float
    slack_ratio: float
    passed: bool


def validate_bounds_end_to_end(model: QueueModel, seeds: Sequence[int], events: int,
                               z: float = Z_BOUND, backend_name: str | None = None) -> VerifyReport:
    """Simulated E[Q] (both modes) + 3 SE must lie below every applicable bound."""
    rep = VerifyReport(model, events)
    report = bd.model_bounds(model)
    rows = []
    for mode in (Mode.ORIGINAL, Mode.MODIFIED):
        m = model.with_mode(mode)
        out = engine.run_replications(m, seeds, events, track_loo=[] if mode is Mode.MODIFIED else None,
                                      backend_name=backend_name)
        q = Views(out).time_q().estimate(2)
        for e in report.applicable():
            if e.name == "li_goldberg":
                continue
            ok = q.value + z * q.std_error <= e.value
            rows.append(BoundValidation(mode.value, e.name, q, e.value, e.value / q.value if q.value > 0 else math.inf, ok))
            rep.checks.append(IdentityCheck(f"E[Q]<={e.name}@{mode.value}", UPPER, q, e.value, q.std_error, z, ok))
    rep.extra["validation"] = rows
    rep.extra["bounds"] = report
    return rep


def check_tail_inequality(spec: dl.DistributionSpec, n_samples: int = 1_000_000, seed: int = 0,
                     grid_points: int = 50, z: float = Z_EQUALITY) -> list[IdentityCheck]:
    """Empirical P(V >= t) of the unitized law against C exp(-(t-1)/C), C = R^max."""
    u = dl.unitize(spec)
    C = dl.residual_profile(u).r_sup
    if not math.isfinite(C):
        return [skipped(f"tail[{dl.to_config(spec)}]", UPPER, "R^max is infinite", z)]
    rng = np.random.Generator(np.random.PCG64(seed))
    x = np.sort(dl.sample_block(u, rng, n_samples))
    grid = np.linspace(1.0, 1.0 + 10.0 * C, grid_points)
    res = []
    for t in grid:
        p = (n_samples - np.searchsorted(x, t, side="left")) / n_samples
        se = math.sqrt(max(p * (1.0 - p), 1.0 / n_samples) / n_samples)
        b = bd.tail_bound(C, float(t))
        res.append(IdentityCheck(f"tail[t={t:.4g}]", UPPER, Estimate(float(p), se, 1), b, se, z,
                                 p - b <= z * se))
    return res


def se_decay_slope(model: QueueModel, seed: int, horizons: Sequence[int], reps: int = 1,
                   backend_name: str | None = None) -> float:
    """Log-log slope of the batch-means SE of E_a[Q] against the horizon (about -1/2 when finite).

    The log SE at each horizon is averaged over ``reps`` replications.
    """
    logs = []
    for h in horizons:
        acc = 0.0
        for r in range(reps):
            s = seed if reps == 1 else replication_seed(seed, r)
            out = engine.run(model, s, h, track_loo=[], backend_name=backend_name)
            acc += math.log(Views(out).palm_sc([0], 2).std_error)
        logs.append(acc / reps)
    return float(np.polyfit(np.log(horizons), logs, 1)[0])
