"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel is run once per backend to warm up (JIT compile), then timed as
the best of ``--repeat`` runs.  Both backends must return identical results.
"""
import argparse
import json
import time

import numpy as np

from tmchaos import kernels
from tmchaos.cli import corpus_path
from tmchaos.ensemble import EnsembleConfig, run_ensemble
from tmchaos.fractal import cantor_prefractal
from tmchaos.machine import load_machine


def bench_tm_run():
    # a machine that never halts or loops, so every step pays for loop detection
    machine = load_machine(corpus_path("mixer"))
    nxt, wrt, mov, halt = machine.compiled
    start = machine.states.index(machine.start)
    fuel = 20_000

    def go():
        tape = np.zeros(fuel + 2, np.int64)
        return kernels.tm_run(nxt, wrt, mov, halt, tape, start, fuel, True)
    return go


def bench_scan():
    rng = np.random.default_rng(0)
    # two noisy clusters in strict alternation: every close pair must be followed to the horizon
    x = np.where(np.arange(3000) % 2 == 0, 0.2, 0.8) + rng.uniform(-1e-3, 1e-3, 3000)

    def go():
        return kernels.sensitivity_scan(x, 0.02, 8, lambda kind, i, j: False)
    return go


def bench_count_ordered():
    samples = np.random.default_rng(1).random((2_000_000, 4))
    return lambda: kernels.count_ordered(samples)


def bench_cantor():
    return lambda: len(cantor_prefractal(16))


def bench_ensemble():
    cfg = EnsembleConfig(100, fuel=5000, seed=42)
    return lambda: run_ensemble(cfg)["counts"]


BENCHES = {
    "tm_run": bench_tm_run,
    "sensitivity_scan": bench_scan,
    "count_ordered": bench_count_ordered,
    "cantor_prefractal(16)": bench_cantor,
    "ensemble(100)": bench_ensemble,
}


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def canonical(out):
    if isinstance(out, tuple):
        return tuple(canonical(v) for v in out)
    if isinstance(out, np.ndarray):
        return out.tobytes()
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args()
    if not kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rows = []
    print(f"{'kernel':24s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, make in BENCHES.items():
        fn = make()
        times, outs = {}, {}
        for backend in ("numba", "numpy"):
            with kernels.use_backend(backend):
                fn()
                times[backend], outs[backend] = timed(fn, args.repeat)
        if canonical(outs["numba"]) != canonical(outs["numpy"]):
            raise SystemExit(f"{name}: backends disagree")
        speedup = times["numpy"] / times["numba"]
        rows.append({"kernel": name, **times, "speedup": speedup})
        print(f"{name:24s} {times['numba']:10.4f} {times['numpy']:10.4f} {speedup:7.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
