"""Leave-one-out estimators: covariance terms, dominance and uncorrelation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ggn_lab import distributions as dl
from ggn_lab.palm import Views
from ggn_lab.sim.engine import SimOutput
from ggn_lab.sim.model import Mode, QueueModel
from ggn_lab.stats import BatchStat, Estimate, InsufficientData, MIN_BATCHES

MIN_CELL_SAMPLES = 500


class PreconditionError(ValueError):
    pass


def _require_modified(out: SimOutput) -> None:
    if out.model.mode is not Mode.MODIFIED:
        raise PreconditionError("this estimator needs a modified-mode run")
    if out.n_batches < MIN_BATCHES:
        raise InsufficientData(f"need at least {MIN_BATCHES} post-warmup batches, got {out.n_batches}")


@dataclass
class GammaEstimates:
    """Gamma_s[j] = E_s[1{Q=0} mu_j R_s[j]] - (1-rho) E_pi[mu_j R_s[j]];
    Gamma_a = E_s[1{Q=0} Lam R_a] - (1-rho) E_pi[Lam R_a]."""

    gamma_s: list[Estimate]
    gamma_a: Estimate
    palm_s: list[Estimate]
    stationary_s: list[Estimate]
    palm_a: Estimate
    stationary_a: Estimate
    gamma_s_sym: Estimate | None = None  # mean over j; equals each Gamma_sj when servers are exchangeable
    stats: dict = field(default_factory=dict, repr=False)  # BatchStat forms for combining

    def gamma_s_sum(self) -> BatchStat:
        return sum(self.stats["gamma_s"][1:], self.stats["gamma_s"][0])


def estimate_gammas(out: SimOutput, model: QueueModel | None = None) -> GammaEstimates:
    model = model or out.model
    _require_modified(out)
    if model.rho >= 1.0:
        raise PreconditionError("covariance terms need rho < 1")
    v = Views(out)
    comp = v.completions()
    one_minus = 1.0 - model.rho
    mu = model.service_rates
    lam = model.arrival_rate
    gs, ps, ss = [], [], []
    for j in range(model.n):
        p = v.palm_rs(comp, j, q0=True) * float(mu[j])
        s = v.time_rs(j) * float(mu[j])
        gs.append(p - s * one_minus)
        ps.append(p)
        ss.append(s)
    pa = v.palm_sc(comp, 4) * lam
    sa = v.time_ra() * lam
    ga = pa - sa * one_minus
    sym = sum(gs[1:], gs[0]) * (1.0 / model.n) if model.homogeneous_servers else None
    return GammaEstimates(
        gamma_s=[g.estimate() for g in gs], gamma_a=ga.estimate(),
        palm_s=[p.estimate() for p in ps], stationary_s=[s.estimate() for s in ss],
        palm_a=pa.estimate(), stationary_a=sa.estimate(),
        gamma_s_sym=None if sym is None else sym.estimate(),
        stats={"gamma_s": gs, "gamma_a": ga, "gamma_s_sym": sym},
    )


@dataclass
class DominanceCheck:
    passed: bool
    min_margin: dict[int, int]
    violations: dict[int, int]


def check_dominance(out: SimOutput) -> DominanceCheck:
    """Q_loo[j] >= Q at every event boundary for every tracked j."""
    if out.track_loo.size == 0:
        raise PreconditionError("no leave-one-out system was tracked")
    mm = {int(j): int(out.margin[k, 0]) for k, j in enumerate(out.track_loo)}
    vv = {int(j): int(out.margin[k, 1]) for k, j in enumerate(out.track_loo)}
    return DominanceCheck(all(m >= 0 for m in mm.values()) and not any(vv.values()), mm, vv)


def uncorrelation_stat(out: SimOutput, i: int, j: int) -> BatchStat:
    model = out.model
    _require_modified(out)
    if i == j:
        raise PreconditionError("uncorrelation needs two distinct servers i != j")
    if model.rho_minus(j) >= 1.0:
        raise PreconditionError(f"leave-one-out system without server {j} is unstable")
    if dl.is_lattice(model.services[j]):
        raise PreconditionError(f"service law of server {j} is lattice")
    v = Views(out)
    cls = [i + 1]
    return v.palm_loo(cls, j, 1) - v.palm_loo(cls, j, 0) * v.time_rs(j)


def check_uncorrelation(out: SimOutput, i: int, j: int) -> Estimate:
    """E_{s,i}[1{Q_loo[j]=0} R_s[j]] - P_{s,i}[Q_loo[j]=0] E_pi[R_s[j]]; should be 0."""
    return uncorrelation_stat(out, i, j).estimate()


def idle_loo_stat(out: SimOutput, j: int) -> BatchStat:
    """Fraction of all completions that are at servers i != j and see Q_loo[j] = 0."""
    v = Views(out)
    k = v.k_of(j)
    cls = v.completions(exclude=j)
    num = out.acc["palm_loo"][:, cls, k, 0].sum(axis=1)
    den = v.palm_count(v.completions())
    return BatchStat.ratio(num, den)


def idle_loo_target(model: QueueModel, j: int) -> float:
    return 1.0 - model.rho - model.service_rates[j] / model.total_rate


def palm_residual_gap(out: SimOutput, i: int, j: int) -> Estimate:
    """E_{s,i}[R_s[j]] - E_pi[R_s[j]] for i != j (reported, not asserted)."""
    if i == j:
        raise PreconditionError("need i != j")
    v = Views(out)
    return (v.palm_rs([i + 1], j) - v.time_rs(j)).estimate()


@dataclass
class CellBound:
    j: int
    cell: int
    measure: str  # "stationary" or "completion"
    quantity: str  # "mu R_s" (upper) or "Lam R_a" (lower)
    estimate: Estimate
    bound: float
    samples: int
    passed: bool


CELL_NAMES = {0: "Q=0,Qloo=0", 1: "Q=0,Qloo>0", 2: "Q>0,Qloo=0", 3: "Q>0,Qloo>0"}


def conditional_residual_checks(out: SimOutput, z: float = 4.0,
                                min_samples: int = MIN_CELL_SAMPLES) -> list[CellBound]:
    """Binned mean residuals against R_s^max (above) and R_a^min (below).

    Cells are (Q=0 or not) x (Q_loo[j]=0 or not); cells with fewer than
    ``min_samples`` events are skipped.
    """
    model = out.model
    _require_modified(out)
    v = Views(out)
    lam = model.arrival_rate
    a_prof = dl.residual_profile(model.arrival)
    ra_min = lam * a_prof.r_inf
    res = []
    for j in (int(x) for x in out.track_loo):
        mu = float(model.service_rates[j])
        rs_max = mu * dl.residual_profile(model.services[j]).r_sup
        others = v.completions(exclude=j)
        for cell in range(4):
            nev = v.cell_events(j, cell)
            if nev < min_samples:
                continue
            st = (v.time_cell(j, cell, 1) * mu).estimate(2)
            res.append(CellBound(j, cell, "stationary", "mu R_s", st, rs_max, nev,
                                 st.value <= rs_max + z * st.std_error))
            pe, m = v.palm_cell(others, j, cell, 1)
            if m >= min_samples:
                pe = (pe * mu).estimate(2)
                res.append(CellBound(j, cell, "completion", "mu R_s", pe, rs_max, m,
                                     pe.value <= rs_max + z * pe.std_error))
            sa = (v.time_cell(j, cell, 2) * lam).estimate(2)
            res.append(CellBound(j, cell, "stationary", "Lam R_a", sa, ra_min, nev,
                                 sa.value >= ra_min - z * sa.std_error))
            pa, m = v.palm_cell(v.completions(), j, cell, 2)
            if m >= min_samples:
                pa = (pa * lam).estimate(2)
                res.append(CellBound(j, cell, "completion", "Lam R_a", pa, ra_min, m,
                                     pa.value >= ra_min - z * pa.std_error))
    return res


def loo_stable(model: QueueModel, j: int) -> bool:
    return model.rho_minus(j) < 1.0


def tracked(out: SimOutput) -> list[int]:
    return [int(x) for x in np.asarray(out.track_loo)]
