"""Config-driven experiments: simulation, bounds, verification, sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ggn_lab import __version__
from ggn_lab import bounds as bd
from ggn_lab import distributions as dl
from ggn_lab import loo, verify
from ggn_lab.config import ExperimentConfig
from ggn_lab.palm import Views
from ggn_lab.sim import engine
from ggn_lab.sim.coupling import run_coupled_dominance
from ggn_lab.sim.model import InitConfig, Mode, QueueModel

VERIFY_DEFAULT_EVENTS = 10_000_000


def header(config_hash: str) -> str:
    return f"# ggn-lab {__version__} config={config_hash}\n"


def _num(x: float) -> object:
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float):
        return _num(obj)
    return obj


def _one_run(args) -> engine.SimOutput:
    model, seed, events, warmup, track, init = args
    return engine.run(model, seed, events, warmup, track, init)


def run_replications(model: QueueModel, seeds: Sequence[int], events: int, warmup: int | None = None,
                     track: Sequence[int] | None = None, init: InitConfig | None = None,
                     workers: int | None = None) -> engine.SimOutput:
    """Independent replications, fanned out over processes, merged in seed order."""
    jobs = [(model, s, events, warmup, track, init) for s in seeds]
    workers = workers if workers is not None else min(len(jobs), os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            outs = list(ex.map(_one_run, jobs))
    else:
        outs = [_one_run(j) for j in jobs]
    out = outs[0]
    for o in outs[1:]:
        out = out.merge(o)
    return out


def _estimate_dict(e) -> dict:
    return _clean(e.to_dict())


def simulate_summary(cfg: ExperimentConfig, model: QueueModel, out: engine.SimOutput) -> dict:
    v = Views(out)
    d = out.summary()
    d["estimates"] = {
        "time_avg_Q": _estimate_dict(v.time_q().estimate(2)),
        "P_Q0": _estimate_dict(v.time_p_q0().estimate(2)),
    }
    d["model"] = {"rho": model.rho, "n": model.n, "mode": model.mode.value, "routing": model.routing.value,
                  "arrival": dl.to_config(model.arrival), "services": [dl.to_config(s) for s in model.services]}
    return _clean(d)


@dataclass
class ExperimentResult:
    exit_code: int
    files: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    stdout: str = ""


def _init(cfg: ExperimentConfig) -> InitConfig:
    return InitConfig(rule=cfg.run.init)


def run_experiment(cfg: ExperimentConfig, tasks: Sequence[str] | None = None, out_dir: str | Path | None = None,
                   as_json: bool = False, workers: int | None = None) -> ExperimentResult:
    tasks = list(tasks if tasks is not None else cfg.tasks)
    out = Path(out_dir or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    hdr = header(cfg.source_hash)
    model = cfg.model.build()
    res = ExperimentResult(0)
    summary: dict = {"generator": {"tool": "ggn-lab", "version": __version__, "config_hash": cfg.source_hash},
                     "tasks": tasks}
    lines: list[str] = []

    track = cfg.run.track_loo if model.mode is Mode.MODIFIED else None
    if "simulate" in tasks:
        o = run_replications(model, cfg.run.seeds, cfg.run.events, cfg.run.warmup, track,
                             _init(cfg), workers)
        summary["simulate"] = simulate_summary(cfg, model, o)
        q = summary["simulate"]["estimates"]["time_avg_Q"]
        lines.append(f"simulate: E[Q] = {q['value']:.6g} +- {q['se']:.3g} (rho={model.rho:.6g}, n={model.n}, "
                     f"mode={model.mode.value}, {len(cfg.run.seeds)} seed(s) x {cfg.run.events} events)")
        if cfg.run.log_events:
            lg = engine.run(model, cfg.run.seeds[0], cfg.run.events, cfg.run.warmup, track,
                            _init(cfg), log_events=True).log
            p = out / "events.csv"
            p.write_text(lg.to_csv(hdr))
            res.files.append(p)

    if "bounds" in tasks:
        rep = bd.model_bounds(model)
        summary["bounds"] = _clean(rep.to_dict())
        lines.append(rep.to_json() if as_json else rep.to_csv().rstrip("\n"))

    checks: list[verify.IdentityCheck] = []
    gamma_block = ""
    if "verify" in tasks or "gammas" in tasks:
        mm = model.with_mode(Mode.MODIFIED)
        o = run_replications(mm, cfg.run.seeds, cfg.run.events, cfg.run.warmup, cfg.run.track_loo, _init(cfg),
                             workers)
        g = loo.estimate_gammas(o, mm)
        if "verify" in tasks:
            rep = verify.verify_output(o)
            checks.extend(rep.checks)
            if mm.rho < 1.0:
                val = verify.validate_bounds_end_to_end(model, cfg.run.seeds, cfg.run.events)
                checks.extend(val.checks)
        gamma_block = verify.gamma_csv(g, mm)
        summary["gammas"] = _clean({
            "gamma_s": [e.to_dict() for e in g.gamma_s], "gamma_a": g.gamma_a.to_dict(),
            "gamma_s_sym": None if g.gamma_s_sym is None else g.gamma_s_sym.to_dict(),
        })
    if checks or gamma_block:
        p = out / "verify.csv"
        body = verify.checks_csv(checks, hdr) if checks else hdr
        if gamma_block:
            body += "# gamma\n" + gamma_block
        p.write_text(body)
        res.files.append(p)
        fails = [c for c in checks if not c.skipped and not c.passed]
        summary["verify"] = {"checks": len(checks), "skipped": sum(c.skipped for c in checks),
                             "failed": [c.name for c in fails]}
        lines.append(f"verify: {len(checks)} checks, {len(fails)} failed, "
                     f"{sum(c.skipped for c in checks)} skipped")
        if fails:
            res.exit_code = 1

    if "dominance" in tasks:
        om = model.with_mode(Mode.ORIGINAL)
        reps = [run_coupled_dominance(om, s, cfg.run.events) for s in cfg.run.seeds]
        summary["dominance"] = [_clean(r.__dict__ | {"passed": r.passed}) for r in reps]
        ok = all(r.passed for r in reps)
        lines.append(f"dominance: {'pass' if ok else 'FAIL'} over {len(reps)} seed(s)")
        if not ok:
            res.exit_code = 1

    if "sweep" in tasks:
        rows = run_sweep(cfg, workers=workers)
        p = out / "sweep.csv"
        p.write_text(sweep_csv(rows, hdr))
        res.files.append(p)
        summary["sweep"] = {"rows": len(rows)}
        lines.append(f"sweep: {len(rows)} rows")
        if any(r.get("pass") is False for r in rows):
            res.exit_code = 1

    p = out / "summary.json"
    p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    res.files.insert(0, p)
    res.summary = summary
    res.stdout = "\n".join(lines)
    return res


SWEEP_BOUNDS = ("main", "simplified", "mgn", "hetero", "hetero_simplified", "hetero_mgn", "kingman")


def _sweep_cells(cfg: ExperimentConfig) -> list[tuple[float, int, str]]:
    sw = cfg.sweep
    cells = [(r, n, "") for r in sw.rho for n in sw.n]
    if sw.hw_n:
        c = 1.0 if sw.hw_c is None else float(sw.hw_c)
        cells += [(1.0 - c / math.sqrt(n), n, "HW") for n in sw.hw_n]
    if sw.nds_n:
        c = 1.0 if sw.nds_c is None else float(sw.nds_c)
        cells += [(1.0 - c / n, n, "NDS") for n in sw.nds_n]
    return cells


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list[dict]:
    """One row per (rho, n) cell; bounds recomputed per cell, optional simulation."""
    if cfg.sweep is None:
        raise ValueError("config has no [sweep] section")
    A = cfg.model.arrival
    S = cfg.model.services[0]
    rows = []
    for rho, n, tag in _sweep_cells(cfg):
        if not 0.0 < rho < 1.0:
            raise ValueError(f"sweep cell with n={n} has load {rho} outside (0, 1)")
        model = QueueModel.at_load(A, [S] * n, rho, cfg.model.mode, routing=cfg.model.routing)
        rep = bd.bound_report(A, [S] * n, rho)
        row: dict = {"rho": rho, "n": n, "regime": tag}
        for name in SWEEP_BOUNDS:
            try:
                e = rep.get(name)
                row[name] = e.value if e.applicable or name == "kingman" else math.nan
            except KeyError:
                row[name] = math.nan
        scale = "mgn" if math.isfinite(row["mgn"]) else "main"
        row["scaling_bound"] = scale
        row["bound_times_one_minus_rho"] = row[scale] * (1.0 - rho)
        if cfg.sweep.simulate:
            o = run_replications(model, cfg.run.seeds, cfg.run.events, cfg.run.warmup, [], _init(cfg), workers)
            q = Views(o).time_q().estimate(2)
            row["sim_EQ"] = q.value
            row["sim_se"] = q.std_error
            row["slack_ratio"] = row["main"] / q.value if q.value > 0 else math.inf
            row["pass"] = all(q.value + 3.0 * q.std_error <= row[b] for b in
                              ("main", "simplified", "mgn", "hetero", "hetero_simplified", "hetero_mgn")
                              if math.isfinite(row[b]))
        rows.append(row)
    return rows


def sweep_csv(rows: list[dict], hdr: str = "") -> str:
    cols = ["rho", "n", "regime"] + list(SWEEP_BOUNDS) + ["scaling_bound", "bound_times_one_minus_rho"]
    if rows and "sim_EQ" in rows[0]:
        cols += ["sim_EQ", "sim_se", "slack_ratio", "pass"]
    buf = io.StringIO()
    buf.write(hdr)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        out = []
        for c in cols:
            x = r.get(c, "")
            if isinstance(x, bool):
                x = str(x).lower()
            elif isinstance(x, float):
                x = repr(x) if math.isfinite(x) else ("" if math.isnan(x) else "inf")
            out.append(x)
        w.writerow(out)
    return buf.getvalue()


# ---------------------------------------------------------------- examples

def example_cases() -> list[tuple[str, dl.DistributionSpec, float]]:
    """(label, unit-mean service law, mu * sup-bound used by the example)."""
    g05 = dl.gamma(0.5, 2.0)
    g2 = dl.gamma(2.0, 0.5)
    ph = dl.unitize(dl.phase_type([0.6, 0.4], [[-2.0, 1.0], [0.0, -0.5]]))
    mu_ph = 1.0 / dl.moments(ph).mean
    return [
        ("nbue_erlang2", dl.erlang(2, 2.0), 1.0),
        ("gamma_0.5", g05, max(1.0 / 0.5, 1.0)),
        ("gamma_2", g2, max(1.0 / 2.0, 1.0)),
        ("phase_type_2", ph, mu_ph * dl.phase_residual_bound(ph)),
        ("bounded_uniform", dl.uniform(0.5, 1.5), 1.5),
    ]


def reproduce_examples(events: int = 1_000_000, seeds: Sequence[int] = (1, 2), rhos: Sequence[float] = (0.5, 0.9),
                       ns: Sequence[int] = (1, 10), workers: int | None = None) -> list[dict]:
    """Simulate the M/GI/n example families and compare with each example's bound."""
    rows = []
    for label, S, c in example_cases():
        for rho in rhos:
            for n in ns:
                model = QueueModel.at_load(dl.exponential(1.0), [S] * n, rho, Mode.ORIGINAL)
                o = run_replications(model, seeds, events, None, [], None, workers)
                q = Views(o).time_q().estimate(2)
                bound = c / (1.0 - rho)
                rows.append({"example": label, "rho": rho, "n": n, "sim_EQ": q.value, "sim_se": q.std_error,
                             "example_bound": bound, "mgn": bd.mgn_bound(S, rho),
                             "pass": q.value + 3.0 * q.std_error <= bound})
    return rows


def examples_csv(rows: list[dict], hdr: str = "") -> str:
    buf = io.StringIO()
    buf.write(hdr)
    w = csv.writer(buf, lineterminator="\n")
    cols = ["example", "rho", "n", "sim_EQ", "sim_se", "example_bound", "mgn", "pass"]
    w.writerow(cols)
    for r in rows:
        w.writerow([str(r[c]).lower() if isinstance(r[c], bool) else (repr(r[c]) if isinstance(r[c], float) else r[c])
                    for c in cols])
    return buf.getvalue()
