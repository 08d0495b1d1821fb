"""Closed-form upper bounds on the steady-state mean queue length.

All bounds depend on the arrival and service laws only through their
unitized versions (mean 1), so scales are irrelevant once the load is known.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from ggn_lab import distributions as dl
from ggn_lab.distributions import DistributionSpec, Family

RHO_TOL = 1e-9
LG_CONST = 2.1e21


class Unstable(ValueError):
    """The load is not below one."""


class AssumptionViolated(ValueError):
    """A bound's assumption fails (e.g. unbounded mean residual time)."""


@dataclass(frozen=True)
class Unitized:
    """Moments and residual profile of ``mu * V`` for a law with rate ``mu``."""

    variance: float
    second: float
    r_max: float
    r_min: float
    method: str

    @classmethod
    def of(cls, spec: DistributionSpec) -> "Unitized":
        m = dl.moments(spec)
        prof = dl.residual_profile(spec)
        return cls(m.scv, 1.0 + m.scv, prof.r_sup / m.mean, prof.r_inf / m.mean, prof.method)


def resolve_rho(rho: float | None = None, lam: float | None = None, mu_sum: float | None = None) -> float:
    """Load given directly, from ``lam / mu_sum``, or both (must agree to 1e-9)."""
    derived = None
    if lam is not None and mu_sum is not None:
        derived = lam / mu_sum
    if rho is None and derived is None:
        raise ValueError("need rho or both lam and mu_sum")
    if rho is not None and derived is not None and abs(rho - derived) > RHO_TOL * max(1.0, abs(rho)):
        raise ValueError(f"supplied rho={rho!r} disagrees with lam/mu_sum={derived!r}")
    r = rho if rho is not None else derived
    if not r > 0:
        raise ValueError(f"load must be positive, got {r!r}")
    return float(r)


def _stable(rho: float) -> None:
    if rho >= 1.0:
        raise Unstable(f"load rho={rho:.6g} >= 1")


def _finite_rmax(u: Unitized, who: str = "S") -> None:
    if not math.isfinite(u.r_max):
        raise AssumptionViolated(f"R^max of {who} is infinite")


def kingman_bound(A: DistributionSpec, S: DistributionSpec, n: int = 1, rho: float | None = None) -> float:
    """(rho^2 Var(mu S) + Var(lam A)) / (2 (1 - rho)); rho = lam / (n mu) unless given."""
    ma, ms = dl.moments(A), dl.moments(S)
    r = resolve_rho(rho, 1.0 / ma.mean, n / ms.mean) if rho is None else resolve_rho(rho)
    _stable(r)
    return (r * r * ms.scv + ma.scv) / (2.0 * (1.0 - r))


def main_bound(A: DistributionSpec, S: DistributionSpec, n: int, rho: float) -> float:
    ua, us = Unitized.of(A), Unitized.of(S)
    rho = resolve_rho(rho)
    _stable(rho)
    _finite_rmax(us)
    first = (rho * ua.variance + us.variance + 1.0 - rho) / (2.0 * (1.0 - rho))
    second = min(n, 1.0 / (1.0 - rho)) * (us.r_max - us.second / 2.0)
    third = ua.second / 2.0 - ua.r_min
    return first + second + third


def simplified_bound(A: DistributionSpec, S: DistributionSpec, rho: float) -> float:
    ua, us = Unitized.of(A), Unitized.of(S)
    rho = resolve_rho(rho)
    _stable(rho)
    _finite_rmax(us)
    return (rho * ua.variance - rho + 2.0 * us.r_max) / (2.0 * (1.0 - rho)) + ua.second / 2.0 - ua.r_min


def mgn_bound(S: DistributionSpec, rho: float, A: DistributionSpec | None = None) -> float:
    """R_s^max / (1 - rho); needs Poisson arrivals when ``A`` is given."""
    if A is not None and A.family is not Family.EXPONENTIAL:
        raise AssumptionViolated("the M/GI/n bound needs Poisson arrivals")
    us = Unitized.of(S)
    rho = resolve_rho(rho)
    _stable(rho)
    _finite_rmax(us)
    return us.r_max / (1.0 - rho)


def li_goldberg_bound(A: DistributionSpec, S: DistributionSpec, eps: float, rho: float) -> float:
    if not 0.0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 1/2], got {eps!r}")
    rho = resolve_rho(rho)
    _stable(rho)
    ua = Unitized.of(A)
    us_spec = dl.unitize(S)
    s2 = dl.moments(us_spec).second_moment
    s2e = dl.fractional_moment(us_spec, 2.0 + eps)
    return (LG_CONST * s2 * (s2 ** (1.0 + eps) + s2e) * (1.0 / eps) ** 4 + 49.0 * ua.second) / (1.0 - rho)


def _hetero_parts(A: DistributionSpec, services: Sequence[DistributionSpec], rho: float):
    rho = resolve_rho(rho)
    _stable(rho)
    ua = Unitized.of(A)
    mus = [1.0 / dl.moments(s).mean for s in services]
    msum = sum(mus)
    us = [Unitized.of(s) for s in services]
    bad = [j for j, u in enumerate(us) if not math.isfinite(u.r_max)]
    if bad:
        raise AssumptionViolated(f"R^max infinite for server(s) {bad}")
    w = [m / msum for m in mus]
    return rho, ua, us, w


def hetero_bound(A: DistributionSpec, services: Sequence[DistributionSpec], rho: float) -> float:
    """Heterogeneous refined bound with weights mu_j / mu_sum."""
    rho, ua, us, w = _hetero_parts(A, services, rho)
    first = (rho * ua.variance + sum(wj * u.variance for wj, u in zip(w, us)) + 1.0 - rho) / (2.0 * (1.0 - rho))
    second = sum(min(1.0, wj / (1.0 - rho)) * (u.r_max - u.second / 2.0) for wj, u in zip(w, us))
    return first + second + ua.second / 2.0 - ua.r_min


def hetero_simplified_bound(A: DistributionSpec, services: Sequence[DistributionSpec], rho: float) -> float:
    rho, ua, us, w = _hetero_parts(A, services, rho)
    rbar = sum(wj * u.r_max for wj, u in zip(w, us))
    return (rho * ua.variance - rho + 2.0 * rbar) / (2.0 * (1.0 - rho)) + ua.second / 2.0 - ua.r_min


def hetero_mgn_bound(services: Sequence[DistributionSpec], rho: float, A: DistributionSpec | None = None) -> float:
    if A is not None and A.family is not Family.EXPONENTIAL:
        raise AssumptionViolated("the M/GI/n bound needs Poisson arrivals")
    rho, _, us, w = _hetero_parts(A or dl.exponential(1.0), services, rho)
    return sum(wj * u.r_max for wj, u in zip(w, us)) / (1.0 - rho)


def tail_bound(C: float, t: float) -> float:
    """min(1, C exp(-(t - 1) / C)): tail of a unit-mean law whose mean residual is at most C."""
    if not C > 0:
        raise ValueError("C must be positive")
    if t < 1:
        raise ValueError("t must be at least 1")
    return min(1.0, C * math.exp(-(t - 1.0) / C))


@dataclass
class BoundEntry:
    name: str
    value: float
    applicable: bool
    assumption_flags: list[str] = field(default_factory=list)
    note: str = ""


@dataclass
class BoundReport:
    entries: list[BoundEntry]
    inputs: dict

    def get(self, name: str) -> BoundEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def value(self, name: str) -> float:
        return self.get(name).value

    def applicable(self) -> list[BoundEntry]:
        return [e for e in self.entries if e.applicable]

    def to_dict(self) -> dict:
        def enc(x):
            return x if not isinstance(x, float) or math.isfinite(x) else ("inf" if x > 0 else "-inf")
        ents = []
        for e in self.entries:
            d = asdict(e)
            d["value"] = enc(d["value"])
            ents.append(d)
        return {"bounds": ents, "inputs": self.inputs}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        buf.write(header)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bound", "value", "applicable", "flags"])
        for e in self.entries:
            w.writerow([e.name, repr(e.value), str(e.applicable).lower(), ";".join(e.assumption_flags)])
        return buf.getvalue()


def _entry(name: str, fn, flags: list[str], note: str = "", require: bool = True) -> BoundEntry:
    try:
        v = float(fn())
    except (Unstable, AssumptionViolated) as exc:
        return BoundEntry(name, math.inf, False, flags + [type(exc).__name__ + ": " + str(exc)], note)
    return BoundEntry(name, v, require, list(flags), note)


def bound_report(A: DistributionSpec, services: Sequence[DistributionSpec], rho: float | None = None,
                 eps: float = 0.5) -> BoundReport:
    """Every bound for the given laws at load ``rho`` (default: the laws' own load)."""
    services = list(services)
    n = len(services)
    lam = 1.0 / dl.moments(A).mean
    msum = sum(1.0 / dl.moments(s).mean for s in services)
    rho = resolve_rho(rho, lam, msum) if rho is None else resolve_rho(rho)
    homo = all(s == services[0] for s in services)
    poisson = A.family is Family.EXPONENTIAL
    flags: list[str] = []
    if any(dl.is_lattice(s) for s in services):
        flags.append("lattice_service")
    ua = Unitized.of(A)
    us = [Unitized.of(s) for s in services]
    if any(u.method != "analytic" for u in us + [ua]):
        flags.append("numeric_residual_profile")
    entries: list[BoundEntry] = []
    S = services[0]
    if homo:
        entries.append(_entry("kingman", lambda: kingman_bound(A, S, n, rho), flags,
                              "single-server comparison, not a proven multiserver bound", require=False))
        entries.append(_entry("main", lambda: main_bound(A, S, n, rho), flags))
        entries.append(_entry("simplified", lambda: simplified_bound(A, S, rho), flags))
        mg = _entry("mgn", lambda: mgn_bound(S, rho), flags, require=poisson)
        if not poisson:
            mg.assumption_flags.append("non_poisson_arrivals")
        entries.append(mg)
        entries.append(_entry("li_goldberg", lambda: li_goldberg_bound(A, S, eps, rho), flags, f"eps={eps}"))
        if S.family is Family.PHASE_TYPE:
            mu = 1.0 / dl.moments(S).mean
            ph = dl.phase_residual_bound(S) * mu
            entries.append(_entry("phase_type_mgn", lambda: ph / (1.0 - rho) if rho < 1 else _raise_unstable(rho),
                                  flags + ["phase_mean_absorption_reading"], require=poisson))
    entries.append(_entry("hetero", lambda: hetero_bound(A, services, rho), flags))
    entries.append(_entry("hetero_simplified", lambda: hetero_simplified_bound(A, services, rho), flags))
    hm = _entry("hetero_mgn", lambda: hetero_mgn_bound(services, rho), flags, require=poisson)
    if not poisson:
        hm.assumption_flags.append("non_poisson_arrivals")
    entries.append(hm)
    inputs = {
        "rho": rho, "n": n, "homogeneous": homo,
        "arrival": {"variance": ua.variance, "second_moment": ua.second, "r_max": ua.r_max, "r_min": ua.r_min,
                    "spec": dl.to_config(A)},
        "services": [{"variance": u.variance, "second_moment": u.second, "r_max": u.r_max, "r_min": u.r_min,
                      "profile": u.method, "spec": dl.to_config(s)} for u, s in zip(us, services)],
    }
    return BoundReport(entries, inputs)


def _raise_unstable(rho: float) -> float:
    raise Unstable(f"load rho={rho:.6g} >= 1")


def model_bounds(model, eps: float = 0.5) -> BoundReport:
    return bound_report(model.arrival, model.services, None, eps)
