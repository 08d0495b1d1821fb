"""Compiled kernel vs pure-Python fallback: events per second and bit-identity.

    python3 benchmarks/bench_kernel.py [--events N] [--python-events N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ggn_lab import distributions as dl
from ggn_lab.sim import backend, engine
from ggn_lab.sim.coupling import coupled_paths
from ggn_lab.sim.model import Mode, QueueModel

CASES = [
    ("modified M/M/10 rho=0.8", QueueModel.at_load(dl.exponential(1.0), [dl.exponential(1.0)] * 10, 0.8)),
    ("original M/M/10 rho=0.8", QueueModel.at_load(dl.exponential(1.0), [dl.exponential(1.0)] * 10, 0.8,
                                                   Mode.ORIGINAL)),
    ("modified M/Gamma(0.5)/4 rho=0.9", QueueModel.at_load(dl.exponential(1.0), [dl.gamma(0.5, 2.0)] * 4, 0.9)),
]


def _time(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=5_000_000, help="events for the compiled kernel")
    ap.add_argument("--python-events", type=int, default=50_000, help="events for the Python fallback")
    args = ap.parse_args()
    have = backend.available()
    print(f"backends available: {', '.join(have)}")
    print(f"{'case':34s} {'backend':9s} {'events':>10s} {'ns/event':>10s} {'speedup':>8s}")
    for name, model in CASES:
        py = _time(lambda: engine.run(model, 1, args.python_events, backend_name="python"))
        py_ns = py / args.python_events * 1e9
        print(f"{name:34s} {'python':9s} {args.python_events:10d} {py_ns:10.0f} {1.0:8.1f}")
        if "compiled" in have:
            c = _time(lambda: engine.run(model, 1, args.events, backend_name="compiled"))
            c_ns = c / args.events * 1e9
            print(f"{name:34s} {'compiled':9s} {args.events:10d} {c_ns:10.0f} {py_ns / c_ns:8.1f}")
            a = engine.run(model, 2, 20_000, backend_name="compiled")
            b = engine.run(model, 2, 20_000, backend_name="python")
            same = all(np.array_equal(a.acc[k], b.acc[k]) for k in a.acc)
            print(f"{'':34s} bit-identical accumulators over 20000 events: {same}")
    m = QueueModel.at_load(dl.exponential(1.0), [dl.exponential(1.0)] * 2, 0.9, Mode.ORIGINAL)
    for name in have:
        k = 1_000_000 if name == "compiled" else 20_000
        t = _time(lambda: coupled_paths(m, 1, k, backend_name=name))
        print(f"{'coupling M/M/2 rho=0.9':34s} {name:9s} {k:10d} {t / k * 1e9:10.0f}")


if __name__ == "__main__":
    main()
