"""Sample-path coupling of an original GI/GI/n queue with its modified twin.

Both systems see the same arrival epochs. The k-th job to start service is
given the same service time in both; in the original system it goes to the
server picked by the routing rule, in the modified system it takes the next
completion epoch not claimed by an earlier job. Servers of the modified
system that have no real work run virtual jobs drawn from their own law.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ggn_lab import distributions as dl
from ggn_lab.rng import RandomStream
from ggn_lab.sim import backend
from ggn_lab.sim.engine import BLOCK, init_state
from ggn_lab.sim.model import InitConfig, Mode, QueueModel, Routing


@dataclass
class DominanceReport:
    n_jobs: int
    max_q_diff: int  # max over event epochs of Q_original - Q_modified
    min_start_gap: float  # min over jobs of (modified start - original start)
    violations: int  # event epochs with Q_original > Q_modified
    negative_gaps: int
    seed: int

    @property
    def passed(self) -> bool:
        return self.max_q_diff <= 0 and self.violations == 0 and self.negative_gaps == 0


@dataclass
class CoupledPaths:
    arrivals: np.ndarray
    tau: np.ndarray
    tau_hat: np.ndarray
    server: np.ndarray

    def queue_lengths(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Waiting counts (original, modified) right after each time in ``times``."""
        a = np.searchsorted(self.arrivals, times, side="right")
        q = a - np.searchsorted(np.sort(self.tau), times, side="right")
        qh = a - np.searchsorted(np.sort(self.tau_hat), times, side="right")
        return q, qh


def coupled_paths(model: QueueModel, seed: int, n_arrivals: int, init: InitConfig | None = None,
                  backend_name: str | None = None) -> CoupledPaths:
    """Replay both systems for ``n_arrivals`` arrivals plus the initial queue."""
    model = model.with_mode(Mode.ORIGINAL)
    n = model.n
    kernel = backend.get(backend_name)
    kids = np.random.SeedSequence(int(seed)).spawn(n + 4)
    arr_rng = np.random.Generator(np.random.PCG64(kids[0]))
    srv_rng = [np.random.Generator(np.random.PCG64(k)) for k in kids[1:n + 1]]
    route_rng = np.random.Generator(np.random.PCG64(kids[n + 1]))
    init_stream = RandomStream(kids[n + 2])
    virt_rng = [np.random.Generator(np.random.PCG64(k)) for k in kids[n + 3].spawn(n)]

    st = init_state(model, init, init_stream)
    gaps = []
    left = n_arrivals - 1
    while left > 0:
        m = min(left, BLOCK)
        gaps.append(dl.sample_block(model.arrival, arr_rng, m))
        left -= m
    inter = np.concatenate([[st.ra]] + gaps) if n_arrivals > 0 else np.zeros(0)
    arrivals = np.concatenate([np.zeros(st.q), np.cumsum(inter)])

    free = np.where(st.busy == 1, st.rs, -1.0)
    vfree = free.copy()
    for i in range(n):
        if not st.busy[i]:
            vfree[i] = float(dl.equilibrium_block(model.services[i], virt_rng[i], 1)[0])

    N = arrivals.shape[0]
    tau = np.zeros(N)
    tau_hat = np.zeros(N)
    server = np.zeros(N, dtype=np.int64)
    draws = np.empty((2 * n + 1, BLOCK))
    pos = np.full(2 * n + 1, BLOCK, dtype=np.int64)
    kstate = np.zeros(1, dtype=np.int64)
    routing = 0 if model.routing is Routing.UNIFORM_RANDOM_IDLE else 1
    rates = model.service_rates.astype(float)
    while True:
        status = kernel.run_coupling(routing, arrivals, rates, free, vfree, draws, pos, kstate,
                                     tau, tau_hat, server)
        if status < 0:
            break
        if status < n:
            draws[status] = dl.sample_block(model.services[status], srv_rng[status], BLOCK)
        elif status < 2 * n:
            i = status - n
            draws[status] = dl.sample_block(model.services[i], virt_rng[i], BLOCK)
        else:
            draws[status] = route_rng.random(BLOCK)
        pos[status] = 0
    return CoupledPaths(arrivals, tau, tau_hat, server)


def run_coupled_dominance(model: QueueModel, seed: int, horizon_events: int, init: InitConfig | None = None,
                          backend_name: str | None = None) -> DominanceReport:
    """Check that the modified queue pathwise dominates the original one.

    ``horizon_events`` counts arrivals. Queue lengths are compared right
    after every arrival and every service start of either system.
    """
    p = coupled_paths(model, seed, horizon_events, init, backend_name)
    times = np.unique(np.concatenate([p.arrivals, p.tau, p.tau_hat]))
    q, qh = p.queue_lengths(times)
    d = q - qh
    gap = p.tau_hat - p.tau
    return DominanceReport(
        n_jobs=int(p.arrivals.shape[0]),
        max_q_diff=int(d.max()) if d.size else 0,
        min_start_gap=float(gap.min()) if gap.size else 0.0,
        violations=int((d > 0).sum()),
        negative_gaps=int((gap < 0).sum()),
        seed=int(seed),
    )
