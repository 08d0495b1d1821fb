"""Event-driven simulation of the original and modified GI/GI/n queues.

The hot loop lives in a kernel (compiled or pure Python, see ``backend``)
that consumes pre-generated blocks of variates, one row per random process:
row 0 interarrival times, rows ``1..n`` service times, row ``n+1`` routing
uniforms. A row that runs dry is refilled here from that process's own
stream, so the variates a run sees depend only on ``(model, seed)``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ggn_lab import distributions as dl
from ggn_lab.rng import RandomStream, process_streams
from ggn_lab.sim import backend
from ggn_lab.sim.model import EventRecord, InitConfig, InvalidInit, Mode, QueueModel, Routing, SimState

BLOCK = 8192
N_BATCHES = 32
TIE_REL = 1e-12
N_CELLS = 4  # (Q>0, Q_loo>0) in {0,1}^2, cell = 2*(Q>0) + (Q_loo>0)


def tie_tolerance(model: QueueModel) -> float:
    return TIE_REL * model.time_scale()


def _check_track(model: QueueModel, track: Sequence[int], warn: bool = True) -> np.ndarray:
    idx = np.array(sorted(set(int(j) for j in track)), dtype=np.int64)
    if idx.size and model.mode is Mode.ORIGINAL:
        raise ValueError("leave-one-out tracking is only defined in modified mode")
    if idx.size and (idx.min() < 0 or idx.max() >= model.n):
        raise ValueError(f"track_loo indices must lie in [0, {model.n})")
    for j in idx:
        if warn and model.rho_minus(int(j)) >= 1.0:
            warnings.warn(f"leave-one-out system without server {j} is unstable "
                          f"(rho_-j = {model.rho_minus(int(j)):.4g})", stacklevel=3)
    return idx


def init_state(model: QueueModel, init: InitConfig | None, stream: RandomStream,
               track_loo: Sequence[int] | None = None) -> SimState:
    """Initial state drawn from ``stream`` according to ``init.rule``."""
    init = init or InitConfig()
    n = model.n
    if init.q0 < 0 or int(init.q0) != init.q0:
        raise InvalidInit(f"initial queue length must be a nonnegative integer, got {init.q0!r}")
    if init.rule not in ("equilibrium", "fresh", "explicit"):
        raise InvalidInit(f"unknown residual rule {init.rule!r}")
    track = [] if model.mode is Mode.ORIGINAL else (
        model.default_track_loo() if track_loo is None else list(track_loo))
    loo_idx = np.array(sorted(set(int(j) for j in track)), dtype=np.int64)

    def draw(spec):
        if init.rule == "fresh":
            return dl.sample(spec, stream)
        return dl.equilibrium_sample(spec, stream)

    if model.mode is Mode.ORIGINAL:
        if init.busy is not None:
            if len(init.busy) != n:
                raise InvalidInit(f"busy flags must have length {n}, got {len(init.busy)}")
            busy = np.array([1 if b else 0 for b in init.busy], dtype=np.int64)
        else:
            busy = np.full(n, 1 if init.q0 > 0 else 0, dtype=np.int64)
        if init.q0 > 0 and not busy.all():
            raise InvalidInit("a waiting job with an idle server is not a valid FCFS state")
    else:
        busy = np.ones(n, dtype=np.int64)

    if init.rs is not None:
        if len(init.rs) != n:
            raise InvalidInit(f"explicit residuals must have length {n}, got {len(init.rs)}")
        rs = np.array([float(x) for x in init.rs])
        if (rs < 0).any() or not np.isfinite(rs).all():
            raise InvalidInit("explicit residual service times must be finite and nonnegative")
        if model.mode is Mode.ORIGINAL:
            rs = np.where(busy == 1, rs, 0.0)
    elif init.rule == "explicit":
        raise InvalidInit("explicit rule needs residuals rs")
    else:
        rs = np.zeros(n)
        for i in range(n):
            if busy[i]:
                rs[i] = draw(model.services[i])
    if init.ra is not None:
        ra = float(init.ra)
        if ra < 0 or not math.isfinite(ra):
            raise InvalidInit("explicit residual interarrival time must be finite and nonnegative")
    else:
        ra = draw(model.arrival)
    q0 = int(init.q0)
    return SimState(0.0, ra, rs, q0, np.full(loo_idx.size, q0, dtype=np.int64), loo_idx, busy)


@dataclass
class EventLog:
    """Pre-event snapshots; the fired residual is already zero."""

    time: np.ndarray
    server: np.ndarray
    q: np.ndarray
    ra: np.ndarray
    rs: np.ndarray
    q_loo: np.ndarray
    loo_idx: np.ndarray
    q0: int = 0

    def __len__(self) -> int:
        return int(self.time.shape[0])

    def records(self) -> list[EventRecord]:
        return [EventRecord(float(self.time[k]), int(self.server[k]), int(self.q[k]), float(self.ra[k]),
                            tuple(float(x) for x in self.rs[k]), tuple(int(x) for x in self.q_loo[k]))
                for k in range(len(self))]

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        if header:
            buf.write(header)
        w = csv.writer(buf, lineterminator="\n")
        n = self.rs.shape[1]
        w.writerow(["time", "kind", "server", "Q_pre", "Ra_pre"] + [f"Rs_pre_{i}" for i in range(n)])
        for k in range(len(self)):
            s = int(self.server[k])
            w.writerow([repr(float(self.time[k])), "arrival" if s < 0 else "completion",
                        "" if s < 0 else s, int(self.q[k]), repr(float(self.ra[k]))]
                       + [repr(float(x)) for x in self.rs[k]])
        return buf.getvalue()


def _zeros_acc(nb: int, n: int, k: int) -> dict[str, np.ndarray]:
    c = n + 1
    return {
        "palm_sc": np.zeros((nb, c, 5)),
        "palm_rs": np.zeros((nb, c, n)),
        "palm_q0rs": np.zeros((nb, c, n)),
        "palm_loo": np.zeros((nb, c, k, 2)),
        "palm_cell": np.zeros((nb, c, k, N_CELLS, 3)),
        "time_sc": np.zeros((nb, 4)),
        "time_rs": np.zeros((nb, n)),
        "time_cell": np.zeros((nb, k, N_CELLS, 3)),
    }


@dataclass
class SimOutput:
    """Accumulated sums of one or more replications, split into batches.

    Palm arrays are indexed ``[batch, class, ...]`` with class 0 for
    arrivals and class ``i + 1`` for completions at server ``i``.
    ``palm_sc`` holds per class: count, #{Q=0}, sum Q, sum R_a, sum 1{Q=0} R_a.
    ``time_sc`` holds per batch: elapsed time, time with Q=0, integral of Q,
    integral of R_a. ``margin[k]`` is (min of Q_loo - Q, #violations) over all
    event boundaries, warmup included.
    """

    model: QueueModel
    seeds: list[int]
    horizon_events: int
    warmup_events: int
    track_loo: np.ndarray
    acc: dict[str, np.ndarray]
    margin: np.ndarray
    final_clock: float = 0.0
    backend: str = ""
    log: EventLog | None = None
    final_state: SimState | None = None

    @property
    def n_batches(self) -> int:
        return int(self.acc["time_sc"].shape[0])

    @property
    def seed(self) -> int:
        return self.seeds[0]

    def merge(self, other: "SimOutput") -> "SimOutput":
        """Pool independent replications; sums add and batches concatenate."""
        if other.model != self.model or not np.array_equal(other.track_loo, self.track_loo):
            raise ValueError("can only merge outputs of the same model and tracked set")
        acc = {k: np.concatenate([self.acc[k], other.acc[k]]) for k in self.acc}
        margin = np.stack([np.minimum(self.margin[:, 0], other.margin[:, 0]),
                           self.margin[:, 1] + other.margin[:, 1]], axis=1) if self.margin.size else self.margin
        return SimOutput(self.model, self.seeds + other.seeds, self.horizon_events + other.horizon_events,
                         self.warmup_events + other.warmup_events, self.track_loo, acc, margin,
                         self.final_clock + other.final_clock, self.backend)

    # sums over batches
    def total(self, key: str) -> np.ndarray:
        return self.acc[key].sum(axis=0)

    @property
    def event_counts(self) -> dict[str, int]:
        cnt = self.total("palm_sc")[:, 0]
        out = {"arrival": int(cnt[0])}
        for i in range(self.model.n):
            out[f"completion_{i}"] = int(cnt[i + 1])
        return out

    @property
    def elapsed(self) -> float:
        return float(self.total("time_sc")[0])

    def time_avg(self) -> dict[str, object]:
        t = self.total("time_sc")
        T = t[0]
        rs = self.total("time_rs") / T
        return {"Q": float(t[2] / T), "P_Q0": float(t[1] / T), "R_a": float(t[3] / T), "R_s": rs.tolist()}

    def palm_avg(self) -> dict[str, dict[str, object]]:
        sc = self.total("palm_sc")
        prs = self.total("palm_rs")
        out = {}
        for c in range(self.model.n + 1):
            name = "arrival" if c == 0 else f"completion_{c - 1}"
            N = sc[c, 0]
            if N == 0:
                continue
            out[name] = {"count": int(N), "P_Q0": float(sc[c, 1] / N), "Q": float(sc[c, 2] / N),
                         "R_a": float(sc[c, 3] / N), "R_s": (prs[c] / N).tolist()}
        return out

    def summary(self) -> dict[str, object]:
        return {
            "time_avg": self.time_avg(),
            "palm": self.palm_avg(),
            "event_counts": self.event_counts,
            "seed": self.seeds[0] if len(self.seeds) == 1 else self.seeds,
            "warmup_events": self.warmup_events,
            "horizon_events": self.horizon_events,
            "elapsed_time": self.elapsed,
            "n_batches": self.n_batches,
            "track_loo": self.track_loo.tolist(),
            "loo_min_margin": self.margin[:, 0].tolist() if self.margin.size else [],
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


class Simulator:
    """Owns the state, variate blocks and accumulators of one replication."""

    def __init__(self, model: QueueModel, seed: int, horizon_events: int, warmup_events: int | None = None,
                 track_loo: Sequence[int] | None = None, init: InitConfig | None = None,
                 log_capacity: int = 0, backend_name: str | None = None, n_batches: int = N_BATCHES):
        if horizon_events < 0:
            raise ValueError("horizon_events must be nonnegative")
        if warmup_events is None:
            warmup_events = horizon_events // 10
        if not 0 <= warmup_events <= horizon_events:
            raise ValueError("need 0 <= warmup_events <= horizon_events")
        self.model = model
        self.seed = int(seed)
        self.kernel = backend.get(backend_name)
        self.backend_name = "python" if self.kernel.__name__.endswith("_pykernel") else "compiled"
        n = model.n
        track = model.default_track_loo() if track_loo is None else list(track_loo)
        if model.mode is Mode.ORIGINAL and track_loo is None:
            track = []
        self.loo_idx = _check_track(model, track, warn=track_loo is not None)
        streams = process_streams(self.seed, n)
        self.state = init_state(model, init, streams["init"], self.loo_idx.tolist())
        self._row_spec = [model.arrival] + list(model.services)
        self._row_rng = ([streams["arrival"].generator] + [s.generator for s in streams["servers"]]
                         + [streams["routing"].generator])
        self.draws = np.empty((n + 2, BLOCK))
        self.pos = np.full(n + 2, BLOCK, dtype=np.int64)
        post = horizon_events - warmup_events
        nb = max(1, n_batches)
        self.warmup_events = int(warmup_events)
        self.horizon_events = int(horizon_events)
        self.batch_len = max(1, post // nb)
        self.n_batches = nb
        k = self.loo_idx.size
        self.acc = _zeros_acc(nb, n, k)
        self.margin = np.zeros((k, 2), dtype=np.int64)
        self.margin[:, 0] = np.iinfo(np.int64).max
        if k:
            d = self.state.q_loo - self.state.q
            self.margin[:, 0] = d
            self.margin[:, 1] = (d < 0).astype(np.int64)
        self.tol = tie_tolerance(model)
        self.rates = model.service_rates.astype(float)
        self.events_done = 0
        cap = int(log_capacity)
        self._log = {
            "time": np.zeros(cap), "server": np.zeros(cap, dtype=np.int64), "q": np.zeros(cap, dtype=np.int64),
            "ra": np.zeros(cap), "rs": np.zeros((cap, n)), "q_loo": np.zeros((cap, k), dtype=np.int64),
        }
        self._log_count = 0
        self._q0 = self.state.q

    def _refill(self, row: int) -> None:
        if row == self.model.n + 1:
            self.draws[row] = self._row_rng[row].random(BLOCK)
        else:
            self.draws[row] = dl.sample_block(self._row_spec[row], self._row_rng[row], BLOCK)
        self.pos[row] = 0

    def _run_to(self, target: int, log_arrays: dict | None = None, log_count: int = 0) -> int:
        st = self.state
        dstate = np.array([st.clock, st.ra])
        lg = log_arrays if log_arrays is not None else self._log
        cap = lg["time"].shape[0]
        istate = np.array([st.q, self.events_done, self.warmup_events, target, self.batch_len,
                           self.n_batches, log_count, cap], dtype=np.int64)
        mode = 0 if self.model.mode is Mode.MODIFIED else 1
        routing = 0 if self.model.routing is Routing.UNIFORM_RANDOM_IDLE else 1
        a = self.acc
        while True:
            status = self.kernel.run_chunk(
                mode, routing, dstate, istate, st.rs, st.busy, st.q_loo, st.loo_idx, self.rates, self.tol,
                self.draws, self.pos, a["palm_sc"], a["palm_rs"], a["palm_q0rs"], a["palm_loo"],
                a["palm_cell"], a["time_sc"], a["time_rs"], a["time_cell"], self.margin,
                lg["time"], lg["server"], lg["q"], lg["ra"], lg["rs"], lg["q_loo"])
            if status < 0:
                break
            self._refill(status)
        st.clock = float(dstate[0])
        st.ra = float(dstate[1])
        st.q = int(istate[0])
        self.events_done = int(istate[1])
        return int(istate[6])

    def run(self) -> SimOutput:
        self._log_count = self._run_to(self.horizon_events, log_count=self._log_count)
        return self.output()

    def step(self) -> EventRecord:
        """Fire exactly one event and return its pre-event record."""
        n, k = self.model.n, self.loo_idx.size
        one = {"time": np.zeros(1), "server": np.zeros(1, dtype=np.int64), "q": np.zeros(1, dtype=np.int64),
               "ra": np.zeros(1), "rs": np.zeros((1, n)), "q_loo": np.zeros((1, k), dtype=np.int64)}
        self._run_to(self.events_done + 1, one, 0)
        return EventRecord(float(one["time"][0]), int(one["server"][0]), int(one["q"][0]), float(one["ra"][0]),
                           tuple(one["rs"][0].tolist()), tuple(int(x) for x in one["q_loo"][0]))

    def next_is_tied(self) -> bool:
        st = self.state
        active = st.rs if self.model.mode is Mode.MODIFIED else st.rs[st.busy == 1]
        m = min([st.ra] + active.tolist())
        return m <= self.tol

    def output(self) -> SimOutput:
        log = None
        if self._log["time"].shape[0]:
            c = self._log_count
            log = EventLog(self._log["time"][:c].copy(), self._log["server"][:c].copy(),
                           self._log["q"][:c].copy(), self._log["ra"][:c].copy(),
                           self._log["rs"][:c].copy(), self._log["q_loo"][:c].copy(),
                           self.loo_idx.copy(), self._q0)
        return SimOutput(self.model, [self.seed], self.horizon_events, self.warmup_events, self.loo_idx.copy(),
                         {key: v.copy() for key, v in self.acc.items()}, self.margin.copy(),
                         self.state.clock, self.backend_name, log, self.state.copy())


def advance(state: SimState, model: QueueModel, stream: RandomStream) -> tuple[SimState, list[EventRecord]]:
    """Fire the next event and every event simultaneous with it.

    Fresh variates are drawn one at a time from ``stream`` (service times
    first from the completing server's law, routing uniforms for original
    arrivals). The input state is not modified.
    """
    kernel = backend.get()
    st = state.copy()
    n, k = model.n, st.loo_idx.size
    specs = [model.arrival] + list(model.services)
    draws = np.zeros((n + 2, 1))
    pos = np.ones(n + 2, dtype=np.int64)
    acc = _zeros_acc(1, n, k)
    margin = np.zeros((k, 2), dtype=np.int64)
    tol = tie_tolerance(model)
    rates = model.service_rates.astype(float)
    mode = 0 if model.mode is Mode.MODIFIED else 1
    routing = 0 if model.routing is Routing.UNIFORM_RANDOM_IDLE else 1
    records: list[EventRecord] = []
    while True:
        one = {"time": np.zeros(1), "server": np.zeros(1, dtype=np.int64), "q": np.zeros(1, dtype=np.int64),
               "ra": np.zeros(1), "rs": np.zeros((1, n)), "q_loo": np.zeros((1, k), dtype=np.int64)}
        dstate = np.array([st.clock, st.ra])
        istate = np.array([st.q, 0, 0, 1, 1, 1, 0, 1], dtype=np.int64)
        while True:
            status = kernel.run_chunk(mode, routing, dstate, istate, st.rs, st.busy, st.q_loo, st.loo_idx,
                                      rates, tol, draws, pos, acc["palm_sc"], acc["palm_rs"], acc["palm_q0rs"],
                                      acc["palm_loo"], acc["palm_cell"], acc["time_sc"], acc["time_rs"],
                                      acc["time_cell"], margin, one["time"], one["server"], one["q"],
                                      one["ra"], one["rs"], one["q_loo"])
            if status < 0:
                break
            if status == n + 1:
                draws[status, 0] = stream.uniform()
            else:
                draws[status, 0] = dl.sample(specs[status], stream)
            pos[status] = 0
        st.clock, st.ra, st.q = float(dstate[0]), float(dstate[1]), int(istate[0])
        records.append(EventRecord(float(one["time"][0]), int(one["server"][0]), int(one["q"][0]),
                                   float(one["ra"][0]), tuple(one["rs"][0].tolist()),
                                   tuple(int(x) for x in one["q_loo"][0])))
        active = st.rs if mode == 0 else st.rs[st.busy == 1]
        if min([st.ra] + active.tolist()) > tol:
            break
    return st, records


def run(model: QueueModel, seed: int, horizon_events: int, warmup_events: int | None = None,
        track_loo: Sequence[int] | None = None, init: InitConfig | None = None,
        log_events: bool = False, backend_name: str | None = None) -> SimOutput:
    """Simulate ``horizon_events`` events in total, the first ``warmup_events`` discarded."""
    model.check_stable()
    sim = Simulator(model, seed, horizon_events, warmup_events, track_loo, init,
                    log_capacity=horizon_events if log_events else 0, backend_name=backend_name)
    return sim.run()


def run_replications(model: QueueModel, seeds: Sequence[int], horizon_events: int,
                     warmup_events: int | None = None, track_loo: Sequence[int] | None = None,
                     init: InitConfig | None = None, backend_name: str | None = None) -> SimOutput:
    """Independent runs merged into one output (batches concatenate)."""
    out = None
    for s in seeds:
        o = run(model, s, horizon_events, warmup_events, track_loo, init, backend_name=backend_name)
        out = o if out is None else out.merge(o)
    if out is None:
        raise ValueError("need at least one seed")
    return out
