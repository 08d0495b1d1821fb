"""Queue model, initial-state rules and the simulation state record."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ggn_lab import distributions as dl
from ggn_lab.distributions import DistributionSpec


class Mode(enum.Enum):
    MODIFIED = "modified"
    ORIGINAL = "original"


class Routing(enum.Enum):
    UNIFORM_RANDOM_IDLE = "uniform_random_idle"
    FASTEST_IDLE = "fastest_idle"


class InvalidInit(ValueError):
    pass


@dataclass(frozen=True)
class QueueModel:
    arrival: DistributionSpec
    services: tuple[DistributionSpec, ...]
    mode: Mode = Mode.MODIFIED
    routing: Routing = Routing.UNIFORM_RANDOM_IDLE

    def __post_init__(self):
        object.__setattr__(self, "services", tuple(self.services))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "routing", Routing(self.routing))
        if not self.services:
            raise ValueError("a queue model needs at least one server")

    @classmethod
    def homogeneous(cls, arrival: DistributionSpec, service: DistributionSpec, n: int,
                    mode: Mode | str = Mode.MODIFIED, **kw) -> "QueueModel":
        return cls(arrival, (service,) * n, Mode(mode), **kw)

    @classmethod
    def at_load(cls, arrival: DistributionSpec, services: Sequence[DistributionSpec], rho: float,
                mode: Mode | str = Mode.MODIFIED, **kw) -> "QueueModel":
        """Rescale the arrival law so the load is exactly ``rho``."""
        mu_sum = sum(1.0 / dl.moments(s).mean for s in services)
        a = dl.scaled(dl.unitize(arrival), 1.0 / (rho * mu_sum))
        return cls(a, tuple(services), Mode(mode), **kw)

    @property
    def n(self) -> int:
        return len(self.services)

    @property
    def arrival_rate(self) -> float:
        return 1.0 / dl.moments(self.arrival).mean

    @property
    def service_rates(self) -> np.ndarray:
        return np.array([1.0 / dl.moments(s).mean for s in self.services])

    @property
    def total_rate(self) -> float:
        return float(self.service_rates.sum())

    @property
    def rho(self) -> float:
        return self.arrival_rate / self.total_rate

    def rho_minus(self, j: int) -> float:
        """Load of the system with server ``j`` removed (inf for a single server)."""
        rest = self.total_rate - self.service_rates[j]
        return math.inf if rest <= 0 else self.arrival_rate / rest

    @property
    def homogeneous_servers(self) -> bool:
        return all(s == self.services[0] for s in self.services)

    def with_mode(self, mode: Mode | str) -> "QueueModel":
        return QueueModel(self.arrival, self.services, Mode(mode), self.routing)

    def default_track_loo(self) -> list[int]:
        if self.mode is Mode.ORIGINAL:
            return []
        if self.homogeneous_servers:
            return [0]
        stable = [j for j in range(self.n) if self.rho_minus(j) < 1.0]
        return stable or [0]

    def time_scale(self) -> float:
        return max([dl.moments(self.arrival).mean] + [dl.moments(s).mean for s in self.services])

    def check_stable(self) -> None:
        if self.rho >= 1.0:
            warnings.warn(f"load rho={self.rho:.6g} >= 1: no steady state exists", stacklevel=3)


@dataclass
class InitConfig:
    """Initial state rule.

    ``rule`` is ``"equilibrium"`` (residuals from the excess laws),
    ``"fresh"`` (full interarrival/service draws) or ``"explicit"`` (use
    ``ra``/``rs`` as given). ``busy`` only matters in original mode; by
    default every server is busy iff ``q0 > 0``.
    """

    q0: int = 0
    rule: str = "equilibrium"
    ra: float | None = None
    rs: Sequence[float] | None = None
    busy: Sequence[bool] | None = None


@dataclass
class SimState:
    clock: float
    ra: float
    rs: np.ndarray
    q: int
    q_loo: np.ndarray
    loo_idx: np.ndarray
    busy: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def copy(self) -> "SimState":
        return SimState(self.clock, self.ra, self.rs.copy(), self.q, self.q_loo.copy(),
                        self.loo_idx.copy(), self.busy.copy())


@dataclass(frozen=True)
class EventRecord:
    """One fired subroutine with the state immediately before it."""

    time: float
    server: int  # -1 for an arrival, else the completing server (0-based)
    q: int
    ra: float
    rs: tuple[float, ...]
    q_loo: tuple[int, ...] = ()

    @property
    def kind(self) -> str:
        return "arrival" if self.server < 0 else "completion"
