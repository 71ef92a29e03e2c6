"""Compare the compiled trajectory kernel against the pure-Python loop.

Usage: python3 benchmarks/bench_backends.py [--horizon N] [--reps R]

Both backends consume the same random stream and produce bit-identical
trajectories; the benchmark verifies that before timing.
"""

import argparse
import time

import numpy as np

import ttsalab.engine as engine
from ttsalab.engine import RunConfig, run_replication
from ttsalab.noise import NoiseModel
from ttsalab.problems import problem_ids
from ttsalab.schedules import StepSchedule


def time_backend(cfg, reps, backend):
    old = engine.BACKEND
    engine.BACKEND = backend
    try:
        start = time.perf_counter()
        for r in range(reps):
            cap = run_replication(cfg, r)
        elapsed = time.perf_counter() - start
    finally:
        engine.BACKEND = old
    return elapsed, cap


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizon", type=int, default=200_000)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--problem", default="bilevel-sin",
                    choices=problem_ids())
    args = ap.parse_args()

    if not engine.HAVE_KERNEL:
        print("compiled kernel unavailable; nothing to compare")
        return

    cfg = RunConfig(problem_id=args.problem,
                    schedule=StepSchedule(1.0, 0.7, 1.0, 1.0, T0=10),
                    noise=NoiseModel(sigma_xi=1.0, sigma_psi=1.0),
                    horizon=args.horizon, replications=args.reps,
                    base_seed=123)

    t_c, cap_c = time_backend(cfg, args.reps, "auto")
    t_p, cap_p = time_backend(cfg, args.reps, "python")
    assert np.array_equal(cap_c.x_raw, cap_p.x_raw), "backends disagree"
    assert np.array_equal(cap_c.y_raw, cap_p.y_raw), "backends disagree"

    steps = args.horizon * args.reps
    print(f"problem={args.problem} horizon={args.horizon} reps={args.reps}")
    print(f"compiled:    {t_c:8.3f}s  {steps / t_c:12.3e} steps/s")
    print(f"pure python: {t_p:8.3f}s  {steps / t_p:12.3e} steps/s")
    print(f"speedup:     {t_p / t_c:8.1f}x  (trajectories bit-identical)")


if __name__ == "__main__":
    main()
