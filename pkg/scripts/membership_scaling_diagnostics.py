"""Split the membership scaling slope into its Grover and per-tuple parts.

Runs the membership-scaling experiment and fits log-log slopes of
charged_queries and of charged_queries / log2|S|, per k.

    python scripts/membership_scaling_diagnostics.py --trials 20
"""

import argparse
import math

from sgdlog.experiments import ExperimentConfig, loglog_slope, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    sizes = (10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6)
    for k in (2, 3):
        cfg = ExperimentConfig("membership-scaling", k, sizes, args.trials, args.seed)
        res = run_experiment(cfg, jobs=args.jobs)
        xs = [r.size for r in res.rows]
        charged = [r.charged_queries for r in res.rows]
        per_log = [c / math.log2(s) for c, s in zip(charged, xs)]
        print(f"k={k} target={0.5 - 0.5 / k:.3f} "
              f"charged_slope={loglog_slope(xs, charged):.3f} "
              f"charged_over_log_slope={loglog_slope(xs, per_log):.3f}")


if __name__ == "__main__":
    main()
