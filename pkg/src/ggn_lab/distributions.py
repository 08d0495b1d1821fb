"""Parametric nonnegative distributions for interarrival and service times.

A :class:`DistributionSpec` is an immutable ``(family, params)`` pair. The
module-level functions (:func:`sample`, :func:`moments`,
:func:`mean_residual`, :func:`residual_profile`, ...) dispatch on the family.

Mean residual time is ``m(t) = E[V - t | V >= t]``; its supremum and infimum
over ``t >= 0`` are what the queue-length bounds consume (after unitizing
``V`` to mean one).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import integrate, linalg, optimize, special

from ggn_lab.rng import RandomStream

__all__ = [
    "Family",
    "DistributionSpec",
    "MomentSummary",
    "ResidualProfile",
    "InvalidDistribution",
    "QueryBeyondSupport",
    "exponential",
    "gamma",
    "erlang",
    "deterministic",
    "uniform",
    "hyperexponential",
    "phase_type",
    "bounded_empirical",
    "sample",
    "sample_block",
    "moments",
    "fractional_moment",
    "survival",
    "quantile",
    "mean_residual",
    "numeric_mean_residual",
    "residual_profile",
    "numeric_residual_profile",
    "phase_residual_bound",
    "unitize",
    "scaled",
    "is_lattice",
    "equilibrium_sample",
    "equilibrium_block",
    "support_max",
    "from_config",
    "to_config",
]


class InvalidDistribution(ValueError):
    pass


class QueryBeyondSupport(ValueError):
    pass


class Family(enum.Enum):
    EXPONENTIAL = "exponential"
    GAMMA = "gamma"
    DETERMINISTIC = "deterministic"
    UNIFORM = "uniform"
    HYPEREXPONENTIAL = "hyperexponential"
    ERLANG = "erlang"
    PHASE_TYPE = "phase_type"
    EMPIRICAL = "empirical"


_FIELDS: dict[Family, tuple[str, ...]] = {
    Family.EXPONENTIAL: ("rate",),
    Family.GAMMA: ("shape", "scale"),
    Family.DETERMINISTIC: ("value",),
    Family.UNIFORM: ("low", "high"),
    Family.HYPEREXPONENTIAL: ("weights", "rates"),
    Family.ERLANG: ("k", "rate"),
    Family.PHASE_TYPE: ("alpha", "generator"),
    Family.EMPIRICAL: ("samples",),
}


def _freeze(value: Any) -> Any:
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(_freeze(v) for v in value)
    if isinstance(value, (bool, str)) or value is None:
        raise InvalidDistribution(f"parameter value {value!r} is not a number")
    return float(value)


@dataclass(frozen=True)
class DistributionSpec:
    family: Family
    params: Mapping[str, Any] = field(hash=False)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        expected = set(_FIELDS[fam])
        got = set(self.params)
        if got != expected:
            unknown = sorted(got - expected)
            missing = sorted(expected - got)
            raise InvalidDistribution(
                f"{fam.value}: unknown fields {unknown}, missing fields {missing}"
            )
        frozen = {k: _freeze(self.params[k]) for k in _FIELDS[fam]}
        if fam is Family.ERLANG and float(frozen["k"]) == int(frozen["k"]):
            frozen["k"] = int(frozen["k"])
        object.__setattr__(self, "params", frozen)
        _validate(fam, frozen)

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    @property
    def mean(self) -> float:
        return moments(self).mean

    def __repr__(self) -> str:
        return f"DistributionSpec({to_config(self)})"


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    second_moment: float
    variance: float
    scv: float


@dataclass(frozen=True)
class ResidualProfile:
    """Mean residual summary: ``r_sup`` may be ``inf`` (unbounded residual)."""

    r_sup: float
    r_inf: float
    method: str  # "analytic" | "numeric"
    spec: DistributionSpec | None = None

    def m(self, t: float) -> float:
        return mean_residual(self.spec, t)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.r_sup)


# ---------------------------------------------------------------- constructors

def exponential(rate: float) -> DistributionSpec:
    return DistributionSpec(Family.EXPONENTIAL, {"rate": rate})


def gamma(shape: float, scale: float) -> DistributionSpec:
    return DistributionSpec(Family.GAMMA, {"shape": shape, "scale": scale})


def erlang(k: int, rate: float) -> DistributionSpec:
    return DistributionSpec(Family.ERLANG, {"k": int(k), "rate": rate})


def deterministic(value: float) -> DistributionSpec:
    return DistributionSpec(Family.DETERMINISTIC, {"value": value})


def uniform(low: float, high: float) -> DistributionSpec:
    return DistributionSpec(Family.UNIFORM, {"low": low, "high": high})


def hyperexponential(weights: Sequence[float], rates: Sequence[float]) -> DistributionSpec:
    return DistributionSpec(Family.HYPEREXPONENTIAL, {"weights": weights, "rates": rates})


def phase_type(alpha: Sequence[float], generator: Sequence[Sequence[float]]) -> DistributionSpec:
    return DistributionSpec(Family.PHASE_TYPE, {"alpha": alpha, "generator": generator})


def bounded_empirical(samples: Sequence[float]) -> DistributionSpec:
    return DistributionSpec(Family.EMPIRICAL, {"samples": samples})


def _validate(fam: Family, p: dict) -> None:
    def pos(name):
        v = p[name]
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise InvalidDistribution(f"{fam.value}: {name} must be a positive finite number, got {v!r}")

    if fam is Family.EXPONENTIAL:
        pos("rate")
    elif fam is Family.GAMMA:
        pos("shape")
        pos("scale")
    elif fam is Family.ERLANG:
        if not isinstance(p["k"], int) or p["k"] < 1:
            raise InvalidDistribution(f"erlang: k must be a positive integer, got {p['k']!r}")
        pos("rate")
    elif fam is Family.DETERMINISTIC:
        pos("value")
    elif fam is Family.UNIFORM:
        lo, hi = p["low"], p["high"]
        if not (0.0 <= lo < hi < math.inf):
            raise InvalidDistribution(f"uniform: need 0 <= low < high, got ({lo}, {hi})")
    elif fam is Family.HYPEREXPONENTIAL:
        w = np.asarray(p["weights"], dtype=float)
        r = np.asarray(p["rates"], dtype=float)
        if w.ndim != 1 or w.shape != r.shape or w.size == 0:
            raise InvalidDistribution("hyperexponential: weights and rates must be equal-length lists")
        if np.any(w <= 0) or np.any(r <= 0) or not np.all(np.isfinite(r)):
            raise InvalidDistribution("hyperexponential: weights and rates must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidDistribution(f"hyperexponential: weights sum to {w.sum()!r}, not 1")
    elif fam is Family.PHASE_TYPE:
        a = np.asarray(p["alpha"], dtype=float)
        T = np.asarray(p["generator"], dtype=float)
        d = a.size
        if a.ndim != 1 or T.shape != (d, d) or d == 0:
            raise InvalidDistribution("phase_type: alpha must have length d and generator be d x d")
        if np.any(a < 0) or abs(a.sum() - 1.0) > 1e-12:
            raise InvalidDistribution("phase_type: alpha must be a probability vector")
        off = T - np.diag(np.diag(T))
        if np.any(np.diag(T) > 0) or np.any(off < 0) or np.any(T.sum(axis=1) > 1e-12):
            raise InvalidDistribution(
                "phase_type: generator needs nonpositive diagonal, nonnegative "
                "off-diagonal and row sums <= 0"
            )
        try:
            tau = np.linalg.solve(-T, np.ones(d))
        except np.linalg.LinAlgError as exc:
            raise InvalidDistribution("phase_type: generator is singular (no absorption)") from exc
        if not np.all(np.isfinite(tau)) or np.any(tau <= 0):
            raise InvalidDistribution("phase_type: absorption is not certain from every phase")
    elif fam is Family.EMPIRICAL:
        x = np.asarray(p["samples"], dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise InvalidDistribution("empirical: samples must be a nonempty list")
        if np.any(x < 0) or not np.all(np.isfinite(x)) or x.max() <= 0:
            raise InvalidDistribution("empirical: samples must be finite, nonnegative, not all zero")


# ------------------------------------------------------------------- helpers

def _gamma_params(spec: DistributionSpec) -> tuple[float, float]:
    if spec.family is Family.GAMMA:
        return spec["shape"], spec["scale"]
    return float(spec["k"]), 1.0 / spec["rate"]


def _ph(spec: DistributionSpec) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(spec["alpha"], dtype=float), np.asarray(spec["generator"], dtype=float)


def _ph_tau(T: np.ndarray) -> np.ndarray:
    """Mean absorption time from each phase."""
    return np.linalg.solve(-T, np.ones(T.shape[0]))


def _ph_propagate(alpha: np.ndarray, T: np.ndarray, t: float) -> np.ndarray:
    """Direction of ``alpha @ expm(T t)``, renormalized to avoid underflow."""
    if t <= 0:
        return alpha.copy()
    rate = float(np.max(-np.diag(T)))
    steps = max(1, math.ceil(t * rate / 30.0))
    step = linalg.expm(T * (t / steps))
    p = alpha.copy()
    for _ in range(steps):
        p = p @ step
        s = p.sum()
        if s <= 0:
            break
        p /= s
    return p


def _ph_log_survival(alpha: np.ndarray, T: np.ndarray, t: float) -> float:
    rate = float(np.max(-np.diag(T)))
    steps = max(1, math.ceil(t * rate / 30.0))
    step = linalg.expm(T * (t / steps))
    p = alpha.copy()
    logs = 0.0
    for _ in range(steps):
        p = p @ step
        s = p.sum()
        if s <= 0:
            return -math.inf
        logs += math.log(s)
        p /= s
    return logs


def _gamma_tail_fraction(a: float, x: float) -> float:
    """``D`` in ``m(t)/scale = 1 - D`` via the Lentz continued fraction (x > a + 1)."""
    tiny = 1e-300
    f = tiny
    C = f
    Dl = 0.0
    for k in range(1, 10_000):
        c = k * (k - a) if k == 1 else -k * (k - a)
        b = x + 2 * k + 1 - a
        Dl = b + c * Dl
        if abs(Dl) < tiny:
            Dl = tiny
        C = b + c / C
        if abs(C) < tiny:
            C = tiny
        Dl = 1.0 / Dl
        delta = C * Dl
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 0.0 if f == tiny else f


def _gamma_mean_residual(a: float, theta: float, t: float) -> float:
    x = t / theta
    if x <= 0:
        return a * theta
    if x <= a + 1.0:
        qa = special.gammaincc(a, x)
        qa1 = special.gammaincc(a + 1.0, x)
        return theta * (a * qa1 / qa - x)
    return theta * (1.0 - _gamma_tail_fraction(a, x))


# ------------------------------------------------------------------ sampling

def sample_block(spec: DistributionSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` i.i.d. variates from ``spec`` using generator ``rng``."""
    fam = spec.family
    if fam is Family.EXPONENTIAL:
        return rng.standard_exponential(size) / spec["rate"]
    if fam in (Family.GAMMA, Family.ERLANG):
        a, theta = _gamma_params(spec)
        return rng.standard_gamma(a, size) * theta
    if fam is Family.DETERMINISTIC:
        return np.full(size, spec["value"])
    if fam is Family.UNIFORM:
        lo, hi = spec["low"], spec["high"]
        return lo + (hi - lo) * rng.random(size)
    if fam is Family.HYPEREXPONENTIAL:
        w = np.asarray(spec["weights"])
        r = np.asarray(spec["rates"])
        k = np.minimum(np.searchsorted(np.cumsum(w), rng.random(size), side="right"), w.size - 1)
        return rng.standard_exponential(size) / r[k]
    if fam is Family.PHASE_TYPE:
        alpha, T = _ph(spec)
        return _ph_sample(alpha, T, rng, size)
    if fam is Family.EMPIRICAL:
        x = np.asarray(spec["samples"])
        return x[rng.integers(0, x.size, size)]
    raise AssertionError(fam)


def _ph_sample(alpha: np.ndarray, T: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    d = alpha.size
    rates = -np.diag(T)
    jump = T / rates[:, None]
    np.fill_diagonal(jump, 0.0)
    exit_p = 1.0 - jump.sum(axis=1)
    cum = np.cumsum(np.hstack([jump, exit_p[:, None]]), axis=1)
    state = np.minimum(np.searchsorted(np.cumsum(alpha), rng.random(size), side="right"), d - 1)
    out = np.zeros(size)
    alive = np.arange(size)
    while alive.size:
        s = state[alive]
        out[alive] += rng.standard_exponential(alive.size) / rates[s]
        u = rng.random(alive.size)
        nxt = (u[:, None] >= cum[s]).sum(axis=1)
        state[alive] = nxt
        alive = alive[nxt < d]
    return out


def sample(spec: DistributionSpec, stream: RandomStream) -> float:
    return float(sample_block(spec, stream.generator, 1)[0])


def equilibrium_block(spec: DistributionSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draws from the excess law with density ``P(V > t) / E[V]``.

    Families closed under size-biasing use ``U * V_sizebiased``; the others
    have an exact closed form.
    """
    fam = spec.family
    if fam is Family.EXPONENTIAL:
        return rng.standard_exponential(size) / spec["rate"]
    if fam in (Family.GAMMA, Family.ERLANG):
        a, theta = _gamma_params(spec)
        return rng.random(size) * rng.standard_gamma(a + 1.0, size) * theta
    if fam is Family.DETERMINISTIC:
        return spec["value"] * rng.random(size)
    if fam is Family.UNIFORM:
        lo, hi = spec["low"], spec["high"]
        m = 0.5 * (lo + hi)
        y = rng.random(size) * m
        w = hi - lo
        tail = hi - np.sqrt(np.maximum(w * w - 2.0 * w * (y - lo), 0.0))
        return np.where(y <= lo, y, tail)
    if fam is Family.HYPEREXPONENTIAL:
        w = np.asarray(spec["weights"])
        r = np.asarray(spec["rates"])
        we = (w / r) / np.sum(w / r)
        k = np.minimum(np.searchsorted(np.cumsum(we), rng.random(size), side="right"), w.size - 1)
        return rng.standard_exponential(size) / r[k]
    if fam is Family.PHASE_TYPE:
        alpha, T = _ph(spec)
        pe = np.linalg.solve(-T.T, alpha)
        pe = np.clip(pe / pe.sum(), 0.0, None)
        return _ph_sample(pe / pe.sum(), T, rng, size)
    if fam is Family.EMPIRICAL:
        x = np.asarray(spec["samples"])
        cum = np.cumsum(x)
        k = np.minimum(np.searchsorted(cum, rng.random(size) * cum[-1], side="right"), x.size - 1)
        return rng.random(size) * x[k]
    raise AssertionError(fam)


def equilibrium_sample(spec: DistributionSpec, stream: RandomStream) -> float:
    return float(equilibrium_block(spec, stream.generator, 1)[0])


# ------------------------------------------------------------------- moments

def moments(spec: DistributionSpec) -> MomentSummary:
    fam = spec.family
    if fam is Family.EXPONENTIAL:
        r = spec["rate"]
        m1, m2 = 1.0 / r, 2.0 / (r * r)
    elif fam in (Family.GAMMA, Family.ERLANG):
        a, theta = _gamma_params(spec)
        m1, m2 = a * theta, a * (a + 1.0) * theta * theta
    elif fam is Family.DETERMINISTIC:
        c = spec["value"]
        m1, m2 = c, c * c
    elif fam is Family.UNIFORM:
        lo, hi = spec["low"], spec["high"]
        m1, m2 = 0.5 * (lo + hi), (lo * lo + lo * hi + hi * hi) / 3.0
    elif fam is Family.HYPEREXPONENTIAL:
        w = np.asarray(spec["weights"])
        r = np.asarray(spec["rates"])
        m1, m2 = float(np.sum(w / r)), float(np.sum(2.0 * w / r**2))
    elif fam is Family.PHASE_TYPE:
        alpha, T = _ph(spec)
        tau = _ph_tau(T)
        m1 = float(alpha @ tau)
        m2 = float(2.0 * alpha @ np.linalg.solve(-T, tau))
    elif fam is Family.EMPIRICAL:
        x = np.asarray(spec["samples"])
        m1, m2 = float(np.mean(x)), float(np.mean(x * x))
    else:
        raise AssertionError(fam)
    if fam is Family.DETERMINISTIC:
        var = 0.0
    elif fam is Family.EMPIRICAL:
        x = np.asarray(spec["samples"])
        var = float(np.mean((x - m1) ** 2))
    elif fam is Family.EXPONENTIAL:
        var = m1 * m1
    elif fam in (Family.GAMMA, Family.ERLANG):
        a, theta = _gamma_params(spec)
        var = a * theta * theta
    elif fam is Family.UNIFORM:
        var = (spec["high"] - spec["low"]) ** 2 / 12.0
    else:
        var = m2 - m1 * m1
    return MomentSummary(mean=m1, second_moment=m2, variance=var, scv=var / (m1 * m1))


def fractional_moment(spec: DistributionSpec, p: float) -> float:
    """``E[V**p]`` for real ``p > 0``; quadrature for phase-type."""
    fam = spec.family
    if fam is Family.EXPONENTIAL:
        return math.gamma(p + 1.0) / spec["rate"] ** p
    if fam in (Family.GAMMA, Family.ERLANG):
        a, theta = _gamma_params(spec)
        return theta**p * math.exp(special.gammaln(a + p) - special.gammaln(a))
    if fam is Family.DETERMINISTIC:
        return spec["value"] ** p
    if fam is Family.UNIFORM:
        lo, hi = spec["low"], spec["high"]
        return (hi ** (p + 1) - lo ** (p + 1)) / ((p + 1.0) * (hi - lo))
    if fam is Family.HYPEREXPONENTIAL:
        w = np.asarray(spec["weights"])
        r = np.asarray(spec["rates"])
        return float(np.sum(w * math.gamma(p + 1.0) / r**p))
    if fam is Family.EMPIRICAL:
        return float(np.mean(np.asarray(spec["samples"]) ** p))
    val, _ = integrate.quad(lambda t: p * t ** (p - 1.0) * survival(spec, t), 0.0, np.inf,
                            epsabs=0.0, epsrel=1e-10, limit=200)
    return float(val)


def support_max(spec: DistributionSpec) -> float:
    fam = spec.family
    if fam is Family.DETERMINISTIC:
        return spec["value"]
    if fam is Family.UNIFORM:
        return spec["high"]
    if fam is Family.EMPIRICAL:
        return float(max(spec["samples"]))
    return math.inf


def survival(spec: DistributionSpec, t: float) -> float:
    """``P(V > t)``."""
    if t < 0:
        return 1.0
    fam = spec.family
    if fam is Family.EXPONENTIAL:
        return math.exp(-spec["rate"] * t)
    if fam in (Family.GAMMA, Family.ERLANG):
        a, theta = _gamma_params(spec)
        return float(special.gammaincc(a, t / theta))
    if fam is Family.DETERMINISTIC:
        return 1.0 if t < spec["value"] else 0.0
    if fam is Family.UNIFORM:
        lo, hi = spec["low"], spec["high"]
        return 1.0 if t < lo else max(0.0, (hi - t) / (hi - lo))
    if fam is Family.HYPEREXPONENTIAL:
        w = np.asarray(spec["weights"])
        r = np.asarray(spec["rates"])
        return float(np.sum(w * np.exp(-r * t)))
    if fam is Family.PHASE_TYPE:
        alpha, T = _ph(spec)
        return math.exp(_ph_log_survival(alpha, T, t))
    if fam is Family.EMPIRICAL:
        x = np.asarray(spec["samples"])
        return float(np.mean(x > t))
    raise AssertionError(fam)


def quantile(spec: DistributionSpec, u: float) -> float:
    """Smallest ``t`` with ``P(V <= t) >= u``, for ``0 <= u < 1``."""
    if not 0.0 <= u < 1.0:
        raise ValueError("quantile level must lie in [0, 1)")
    fam = spec.family
    if fam is Family.EXPONENTIAL:
        return -math.log1p(-u) / spec["rate"]
    if fam in (Family.GAMMA, Family.ERLANG):
        a, theta = _gamma_params(spec)
        return float(special.gammainccinv(a, 1.0 - u)) * theta
    if fam is Family.DETERMINISTIC:
        return spec["value"]
    if fam is Family.UNIFORM:
        return spec["low"] + u * (spec["high"] - spec["low"])
    if fam is Family.EMPIRICAL:
        x = np.sort(np.asarray(spec["samples"]))
        return float(x[min(x.size - 1, math.ceil(u * x.size) - 1 if u > 0 else 0)])
    target = 1.0 - u
    hi = moments(spec).mean
    while survival(spec, hi) > target:
        hi *= 2.0
    if u == 0.0:
        return 0.0
    return float(optimize.brentq(lambda t: survival(spec, t) - target, 0.0, hi, xtol=1e-14, rtol=1e-12))


# ------------------------------------------------------------ mean residual

def mean_residual(spec: DistributionSpec, t: float) -> float:
    """``E[V - t | V >= t]``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    fam = spec.family
    top = support_max(spec)
    if t > top:
        raise QueryBeyondSupport(f"t={t} exceeds the support maximum {top} of {fam.value}")
    if fam is Family.EXPONENTIAL:
        return 1.0 / spec["rate"]
    if fam in (Family.GAMMA, Family.ERLANG):
        a, theta = _gamma_params(spec)
        return float(_gamma_mean_residual(a, theta, t))
    if fam is Family.DETERMINISTIC:
        return spec["value"] - t
    if fam is Family.UNIFORM:
        lo, hi = spec["low"], spec["high"]
        return 0.5 * (lo + hi) - t if t <= lo else 0.5 * (hi - t)
    if fam is Family.HYPEREXPONENTIAL:
        w = np.asarray(spec["weights"])
        r = np.asarray(spec["rates"])
        e = w * np.exp(-(r - r.min()) * t)
        return float(np.sum(e / r) / np.sum(e))
    if fam is Family.PHASE_TYPE:
        alpha, T = _ph(spec)
        p = _ph_propagate(alpha, T, t)
        return float(p @ _ph_tau(T) / p.sum())
    if fam is Family.EMPIRICAL:
        x = np.asarray(spec["samples"])
        tail = x[x >= t]
        return float(np.mean(tail) - t)
    raise AssertionError(fam)


def numeric_mean_residual(spec: DistributionSpec, t: float) -> float:
    """Tail-integral form ``int_t^inf P(V > u) du / P(V >= t)`` by quadrature.

    Independent of the closed forms in :func:`mean_residual`; used to
    cross-check them.
    """
    if spec.family is Family.EMPIRICAL:
        x = np.asarray(spec["samples"])
        s = float(np.mean(x >= t))
    elif spec.family is Family.DETERMINISTIC:
        s = 1.0 if t <= spec["value"] else 0.0
    else:
        s = survival(spec, t)
    if s <= 0:
        raise QueryBeyondSupport(f"P(V >= {t}) is zero to working precision")
    top = support_max(spec)
    if not math.isfinite(top):
        val, _ = integrate.quad(lambda u: survival(spec, u) / s, t, np.inf,
                                epsabs=0.0, epsrel=1e-11, limit=400)
        return float(val)
    # integrate piecewise between the kinks of the survival function
    kinks = [t, top]
    if spec.family is Family.UNIFORM:
        kinks.append(spec["low"])
    elif spec.family is Family.EMPIRICAL:
        kinks.extend(spec["samples"])
    kinks = sorted({k for k in kinks if t <= k <= top})
    total = 0.0
    for lo, hi in zip(kinks[:-1], kinks[1:]):
        val, _ = integrate.quad(lambda u: survival(spec, u) / s, lo, hi,
                                epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return float(total)


def _tail_limit(spec: DistributionSpec) -> float | None:
    """``lim_{t->inf} m(t)`` where the family has an unbounded support."""
    fam = spec.family
    if fam is Family.EXPONENTIAL:
        return 1.0 / spec["rate"]
    if fam in (Family.GAMMA, Family.ERLANG):
        return _gamma_params(spec)[1]
    if fam is Family.HYPEREXPONENTIAL:
        return 1.0 / min(spec["rates"])
    if fam is Family.PHASE_TYPE:
        _, T = _ph(spec)
        eta = -float(np.max(np.linalg.eigvals(T).real))
        return 1.0 / eta
    return None


def residual_profile(spec: DistributionSpec) -> ResidualProfile:
    """Supremum and infimum of the mean residual time over ``t >= 0``."""
    fam = spec.family
    m1 = moments(spec).mean
    if fam is Family.EXPONENTIAL:
        return ResidualProfile(m1, m1, "analytic", spec)
    if fam in (Family.GAMMA, Family.ERLANG):
        a, theta = _gamma_params(spec)
        if a >= 1.0:
            return ResidualProfile(a * theta, theta, "analytic", spec)
        return ResidualProfile(theta, a * theta, "analytic", spec)
    if fam is Family.DETERMINISTIC:
        return ResidualProfile(spec["value"], 0.0, "analytic", spec)
    if fam is Family.UNIFORM:
        return ResidualProfile(m1, 0.0, "analytic", spec)
    if fam is Family.HYPEREXPONENTIAL:
        return ResidualProfile(1.0 / min(spec["rates"]), m1, "analytic", spec)
    if fam is Family.EMPIRICAL:
        x = np.unique(np.asarray(spec["samples"]))
        counts = np.array([np.sum(np.asarray(spec["samples"]) == v) for v in x])
        # on (x[k-1], x[k]] the residual is (tail mean from x[k]) - t, decreasing in t
        tail_sum = np.cumsum((x * counts)[::-1])[::-1]
        tail_cnt = np.cumsum(counts[::-1])[::-1]
        tail_mean = tail_sum / tail_cnt
        left = np.concatenate([[0.0], x[:-1]])
        return ResidualProfile(float(np.max(tail_mean - left)), 0.0, "analytic", spec)
    if fam is Family.PHASE_TYPE:
        return numeric_residual_profile(spec)
    raise AssertionError(fam)


def numeric_residual_profile(spec: DistributionSpec, max_points: int = 2000) -> ResidualProfile:
    """Grid search of ``m(t)`` on ``t_k = mean/1000 * 1.05**k`` up to the 1-1e-9 quantile."""
    m1 = moments(spec).mean
    t_hi = min(quantile(spec, 1.0 - 1e-9), support_max(spec))
    grid = [0.0]
    t = m1 / 1000.0
    while t <= t_hi and len(grid) < max_points:
        grid.append(t)
        t *= 1.05
    vals = [mean_residual(spec, s) for s in grid]
    limit = _tail_limit(spec)
    if limit is not None:
        vals.append(limit)
    if math.isfinite(support_max(spec)):
        vals.append(0.0)
    return ResidualProfile(float(max(vals)), float(max(0.0, min(vals))), "numeric", spec)


def phase_residual_bound(spec: DistributionSpec) -> float:
    """Largest mean absorption time over phases: an upper bound on ``sup m``."""
    if spec.family is not Family.PHASE_TYPE:
        raise TypeError("phase_residual_bound needs a phase-type spec")
    _, T = _ph(spec)
    return float(np.max(_ph_tau(T)))


# ---------------------------------------------------------------- transforms

def scaled(spec: DistributionSpec, c: float) -> DistributionSpec:
    """Law of ``c * V`` (same family)."""
    if not c > 0:
        raise ValueError("scale factor must be positive")
    fam = spec.family
    p = dict(spec.params)
    if fam is Family.EXPONENTIAL:
        p["rate"] = spec["rate"] / c
    elif fam is Family.GAMMA:
        p["scale"] = spec["scale"] * c
    elif fam is Family.ERLANG:
        p["rate"] = spec["rate"] / c
    elif fam is Family.DETERMINISTIC:
        p["value"] = spec["value"] * c
    elif fam is Family.UNIFORM:
        p["low"], p["high"] = spec["low"] * c, spec["high"] * c
    elif fam is Family.HYPEREXPONENTIAL:
        p["rates"] = [r / c for r in spec["rates"]]
    elif fam is Family.PHASE_TYPE:
        p["generator"] = (np.asarray(spec["generator"]) / c).tolist()
    elif fam is Family.EMPIRICAL:
        p["samples"] = [x * c for x in spec["samples"]]
    return DistributionSpec(fam, p)


def unitize(spec: DistributionSpec) -> DistributionSpec:
    """Rescale to mean exactly one."""
    fam = spec.family
    m1 = moments(spec).mean
    if fam is Family.DETERMINISTIC:
        return deterministic(1.0)
    if fam is Family.EXPONENTIAL:
        return exponential(1.0)
    if fam is Family.GAMMA:
        return gamma(spec["shape"], 1.0 / spec["shape"])
    if fam is Family.ERLANG:
        return erlang(spec["k"], float(spec["k"]))
    return scaled(spec, 1.0 / m1)


MAX_LATTICE_POINTS = 1e6  # a finer span is indistinguishable from a continuous law


def _float_gcd(a: float, b: float, tol: float) -> float:
    while b > tol:
        a, b = b, math.fmod(a, b)
    return a


def is_lattice(spec: DistributionSpec, tol: float = 1e-9) -> bool:
    """True iff the support sits on ``{delta, 2 delta, ...}`` for some ``delta > 0``."""
    fam = spec.family
    if fam is Family.DETERMINISTIC:
        return True
    if fam is not Family.EMPIRICAL:
        return False
    x = np.unique(np.asarray(spec["samples"], dtype=float))
    x = x[x > tol]
    top = float(x[-1])
    g = float(x[0])
    for v in x[1:]:
        g = _float_gcd(float(v), g, tol * top)
        if top / g > MAX_LATTICE_POINTS:
            return False
    return bool(np.all(np.abs(x - np.round(x / g) * g) <= tol * top))


# -------------------------------------------------------------------- config

def _fmt(value: Any) -> str:
    if isinstance(value, tuple):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def to_config(spec: DistributionSpec) -> str:
    """Inline config block, e.g. ``family = "gamma", shape = 0.5, scale = 2.0``."""
    parts = [f'family = "{spec.family.value}"']
    parts += [f"{k} = {_fmt(spec.params[k])}" for k in _FIELDS[spec.family]]
    return ", ".join(parts)


def from_config(block: str | Mapping[str, Any]) -> DistributionSpec:
    """Parse an inline config block or an already-parsed mapping."""
    if isinstance(block, str):
        from ggn_lab.config import loads_toml

        try:
            data = loads_toml("d = {" + block + "}")["d"]
        except Exception as exc:
            raise InvalidDistribution(f"cannot parse distribution block {block!r}: {exc}") from exc
    else:
        data = dict(block)
    if "family" not in data:
        raise InvalidDistribution("distribution block needs a 'family' field")
    name = data.pop("family")
    try:
        fam = Family(name)
    except ValueError:
        known = ", ".join(f.value for f in Family)
        raise InvalidDistribution(f"family: unknown family {name!r} (known: {known})") from None
    return DistributionSpec(fam, data)
