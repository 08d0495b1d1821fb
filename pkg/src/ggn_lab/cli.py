"""Command-line entry point: ``ggn-lab <command> --config FILE``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from ggn_lab import __version__
from ggn_lab.config import ConfigError, load_config

COMMAND_TASKS = {
    "simulate": ["simulate"],
    "bounds": ["bounds"],
    "verify": ["verify", "gammas"],
    "sweep": ["sweep"],
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ggn-lab", description="GI/GI/n simulation and queue-length bounds")
    p.add_argument("--version", action="version", version=f"ggn-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("simulate", "simulate the configured model"),
        ("bounds", "evaluate every closed-form bound"),
        ("verify", "run the identity and inequality checks"),
        ("sweep", "tabulate bounds over a (rho, n) grid"),
        ("run", "run the tasks listed in the config"),
        ("reproduce", "simulate the M/GI/n example families against their bounds"),
    ]:
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=name != "reproduce", help="TOML experiment file")
        sp.add_argument("--seed", type=int, help="run a single replication with this seed")
        sp.add_argument("--events", type=int, help="events per replication (warmup included)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--json", action="store_true", help="print JSON instead of tables")
        sp.add_argument("--workers", type=int, help="parallel replications (default: all cores)")
    return p


def _apply_overrides(cfg, args):
    run = cfg.run
    if args.seed is not None:
        run = dataclasses.replace(run, seeds=[args.seed])
    if args.events is not None:
        if args.events < 1:
            raise ConfigError("--events must be positive")
        warm = run.warmup if run.warmup is not None and run.warmup < args.events else None
        run = dataclasses.replace(run, events=args.events, warmup=warm)
    return dataclasses.replace(cfg, run=run)


def main(argv: list[str] | None = None) -> int:
    from ggn_lab import experiment

    args = build_parser().parse_args(argv)
    if args.command == "reproduce":
        events = args.events or 1_000_000
        seeds = [args.seed] if args.seed is not None else [1, 2]
        if args.config:
            try:
                cfg = _apply_overrides(load_config(args.config), args)
            except (ConfigError, OSError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
            events = cfg.run.events
            seeds = cfg.run.seeds
        rows = experiment.reproduce_examples(events, seeds, workers=args.workers)
        out = Path(args.out or "out")
        out.mkdir(parents=True, exist_ok=True)
        (out / "reproduce.csv").write_text(experiment.examples_csv(rows, experiment.header("reproduce")))
        if args.json:
            print(json.dumps(experiment._clean(rows), indent=2))
        else:
            print(experiment.examples_csv(rows).rstrip("\n"))
        return 0 if all(r["pass"] for r in rows) else 1

    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    tasks = cfg.tasks if args.command == "run" else COMMAND_TASKS[args.command]
    if "sweep" in tasks and cfg.sweep is None:
        print("error: [sweep] section required for the sweep command", file=sys.stderr)
        return 2
    res = experiment.run_experiment(cfg, tasks, args.out, as_json=args.json, workers=args.workers)
    if args.json and args.command != "bounds":
        print(json.dumps(res.summary, indent=2, sort_keys=True))
    elif res.stdout:
        print(res.stdout)
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
