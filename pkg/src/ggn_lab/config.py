"""Experiment configuration files (TOML with ``[model]``, ``[run]``, ``[sweep]``)."""
from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

TASKS = ("simulate", "bounds", "verify", "gammas", "dominance", "sweep")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


def loads_toml(text: str) -> dict[str, Any]:
    return _toml.loads(text)


@dataclass
class ModelBlock:
    arrival: Any
    services: list
    mode: str = "modified"
    routing: str = "uniform_random_idle"
    rho: float | None = None

    def build(self, mode: str | None = None):
        """The QueueModel; with ``rho`` set the arrival law is rescaled to that load."""
        from ggn_lab.sim.model import QueueModel

        m = mode or self.mode
        if self.rho is not None:
            return QueueModel.at_load(self.arrival, self.services, self.rho, m, routing=self.routing)
        return QueueModel(self.arrival, tuple(self.services), m, self.routing)


@dataclass
class RunBlock:
    seeds: list[int]
    events: int = 10_000_000
    warmup: int | None = None
    init: str = "equilibrium"
    track_loo: list[int] | None = None
    log_events: bool = False


@dataclass
class SweepBlock:
    rho: list[float] = field(default_factory=list)
    n: list[int] = field(default_factory=list)
    hw_c: float | None = None
    hw_n: list[int] = field(default_factory=list)
    nds_c: float | None = None
    nds_n: list[int] = field(default_factory=list)
    simulate: bool = False


@dataclass
class ExperimentConfig:
    model: ModelBlock
    run: RunBlock
    tasks: list[str]
    sweep: SweepBlock | None = None
    out: str = "out"
    source_hash: str = ""


def _require(table: dict, key: str, where: str) -> Any:
    if key not in table:
        raise ConfigError(f"[{where}] missing required field '{key}'")
    return table[key]


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"[{where}] unknown field(s): {', '.join(extra)}")


def parse_config(text: str) -> ExperimentConfig:
    from ggn_lab import distributions as dl
    from ggn_lab.rng import replication_seed

    try:
        data = loads_toml(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    _check_keys(data, {"model", "run", "sweep", "tasks", "output"}, "top-level")

    m = _require(data, "model", "top-level")
    _check_keys(m, {"arrival", "service", "services", "n", "mode", "routing", "rho"}, "model")

    def dist(block: Any, where: str):
        if not isinstance(block, dict):
            raise ConfigError(f"[model] field '{where}' must be an inline table")
        try:
            return dl.from_config(block)
        except dl.InvalidDistribution as exc:
            raise ConfigError(f"[model] field '{where}': {exc}") from exc

    arrival = dist(_require(m, "arrival", "model"), "arrival")
    if "services" in m:
        if "service" in m or "n" in m:
            raise ConfigError("[model] give either 'services' or 'service' + 'n', not both")
        services = [dist(b, f"services[{i}]") for i, b in enumerate(m["services"])]
    else:
        svc = dist(_require(m, "service", "model"), "service")
        n = _require(m, "n", "model")
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"[model] field 'n' must be a positive integer, got {n!r}")
        services = [svc] * n
    mode = m.get("mode", "modified")
    if mode not in ("modified", "original"):
        raise ConfigError(f"[model] field 'mode' must be 'modified' or 'original', got {mode!r}")
    routing = m.get("routing", "uniform_random_idle")
    if routing not in ("uniform_random_idle", "fastest_idle"):
        raise ConfigError(f"[model] field 'routing' unknown value {routing!r}")
    rho = m.get("rho")
    if rho is not None and (not isinstance(rho, (int, float)) or not 0.0 < float(rho) < 1.0):
        raise ConfigError(f"[model] field 'rho' must lie in (0, 1), got {rho!r}")
    model = ModelBlock(arrival, services, mode, routing, None if rho is None else float(rho))

    r = data.get("run", {})
    _check_keys(r, {"seeds", "replications", "master_seed", "events", "warmup", "init",
                    "track_loo", "log_events"}, "run")
    if "seeds" in r:
        seeds = [int(s) for s in r["seeds"]]
    else:
        reps = int(r.get("replications", 1))
        master = int(r.get("master_seed", 0))
        seeds = [replication_seed(master, i) for i in range(reps)]
    if len(set(seeds)) != len(seeds) or not seeds:
        raise ConfigError("[run] seeds must be a nonempty list of distinct integers")
    events = r.get("events", 10_000_000)
    if not isinstance(events, int) or events < 1:
        raise ConfigError(f"[run] field 'events' must be a positive integer, got {events!r}")
    warmup = r.get("warmup")
    if warmup is not None and (not isinstance(warmup, int) or not 0 <= warmup < events):
        raise ConfigError(f"[run] field 'warmup' must be an integer in [0, events), got {warmup!r}")
    track = r.get("track_loo")
    if track is not None and (not isinstance(track, list) or not all(isinstance(j, int) for j in track)):
        raise ConfigError(f"[run] field 'track_loo' must be a list of server indices, got {track!r}")
    init = r.get("init", "equilibrium")
    if init not in ("equilibrium", "fresh"):
        raise ConfigError(f"[run] field 'init' must be 'equilibrium' or 'fresh', got {init!r}")
    run = RunBlock(seeds, events, None if warmup is None else int(warmup), init,
                   track, bool(r.get("log_events", False)))

    tasks = data.get("tasks", ["simulate", "bounds"])
    bad = [t for t in tasks if t not in TASKS]
    if bad:
        raise ConfigError(f"[tasks] unknown task(s): {', '.join(bad)}")

    sweep = None
    if "sweep" in data:
        s = data["sweep"]
        if not isinstance(s, dict):
            raise ConfigError("[sweep] must be a table")
        _check_keys(s, {"rho", "n", "hw_c", "hw_n", "nds_c", "nds_n", "simulate"}, "sweep")
        sweep = SweepBlock(
            rho=[float(x) for x in s.get("rho", [])],
            n=[int(x) for x in s.get("n", [])],
            hw_c=s.get("hw_c"),
            hw_n=[int(x) for x in s.get("hw_n", [])],
            nds_c=s.get("nds_c"),
            nds_n=[int(x) for x in s.get("nds_n", [])],
            simulate=bool(s.get("simulate", False)),
        )
        if not (sweep.rho and sweep.n) and not (sweep.hw_n or sweep.nds_n):
            raise ConfigError("[sweep] needs nonempty 'rho' and 'n' grids")
        if any(not 0.0 < x < 1.0 for x in sweep.rho):
            raise ConfigError("[sweep] field 'rho' values must lie in (0, 1)")
    elif "sweep" in tasks:
        raise ConfigError("[sweep] section required when tasks include 'sweep'")

    out = data.get("output", {}).get("dir", "out") if isinstance(data.get("output"), dict) else "out"
    digest = hashlib.sha256(text.encode()).hexdigest()[:16]
    return ExperimentConfig(model, run, list(tasks), sweep, out, digest)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
