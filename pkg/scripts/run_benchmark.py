#!/usr/bin/env python3
"""Multi-seed estimator benchmark on the canonical noisy survey.

Runs each estimator over N seeds of the benchmark scenario (lawnmower survey,
consumer-grade sensor noise, per-seed uncompensated IMU biases) and prints
per-seed total errors plus medians.

Example:
    python3 scripts/run_benchmark.py --seeds 20 --estimators cipg,ekf
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from cipgnav.baselines import FilterConfig, run_ekf, run_inekf
from cipgnav.cascade import CascadeConfig, run_cascade
from cipgnav.metrics import evaluate_trajectories
from cipgnav.sim import benchmark_scenario, generate

RUNNERS = {
    "cipg": lambda epochs, initial: run_cascade(epochs, CascadeConfig(initial=initial)),
    "ekf": lambda epochs, initial: run_ekf(epochs, FilterConfig(), initial=initial),
    "inekf": lambda epochs, initial: run_inekf(epochs, FilterConfig(), initial=initial),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--seeds", type=int, default=20, help="number of seeds (default 20)")
    parser.add_argument("--duration", type=float, default=100.0,
                        help="scenario length in seconds (default 100)")
    parser.add_argument("--estimators", default="cipg,ekf,inekf",
                        help="comma-separated subset of cipg,ekf,inekf")
    args = parser.parse_args(argv)

    names = [n.strip() for n in args.estimators.split(",") if n.strip()]
    unknown = [n for n in names if n not in RUNNERS]
    if unknown:
        parser.error(f"unknown estimator(s) {unknown}; choose from {sorted(RUNNERS)}")

    scores = {n: [] for n in names}
    runtimes = {n: 0.0 for n in names}
    for seed in range(args.seeds):
        run = generate(benchmark_scenario(seed, duration=args.duration))
        epochs = run.epochs()
        initial = run.initial_nav()
        row = [f"seed {seed:3d}"]
        for name in names:
            t0 = time.perf_counter()
            points = RUNNERS[name](epochs, initial)
            runtimes[name] += time.perf_counter() - t0
            report = evaluate_trajectories(points, run.truth)
            scores[name].append(report.total_error)
            row.append(f"{name} {report.total_error:8.4f}")
        print("  ".join(row), flush=True)

    print("-" * 60)
    for name in names:
        med = float(np.median(scores[name]))
        print(f"{name:>6}: median total error {med:8.4f}   "
              f"(mean {np.mean(scores[name]):.4f}, "
              f"total runtime {runtimes[name]:.1f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
