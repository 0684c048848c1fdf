"""Measure (product + charged queries) / (log2 N)^3 for find_rho and semigroup_dlog.

Instances have 64 <= t + r < 2^16. The constant in tests/test_dlog.py::test_query_count_polylog came from this.
"""

import argparse
import logging
import math

import numpy as np

from sgdlog import RhoSemigroupSpec, SimMode, find_rho, make_handle, semigroup_dlog


def ratios(instances, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(instances):
        total = int(rng.integers(64, 1 << 16))
        t = int(rng.integers(1, total))
        h = make_handle(RhoSemigroupSpec(t, total - t))
        g = h.generator("g")
        scale = max(1.0, math.log2(h.order_bound)) ** 3
        h.reset_meter()
        rho = find_rho(h, g, SimMode.SAMPLING, rng)
        out.append(("rho", h.meter.total / scale))
        x = h.oracle.pow(g, int(rng.integers(1, total)))
        h.reset_meter()
        semigroup_dlog(h, g, x, SimMode.SAMPLING, rng, rho=rho)
        out.append(("dlog", h.meter.total / scale))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--instances", type=int, default=200)
    args = ap.parse_args()
    logging.disable(logging.WARNING)
    for seed in range(args.seeds):
        rs = ratios(args.instances, seed)
        for kind in ("rho", "dlog"):
            vals = [v for k, v in rs if k == kind]
            print(f"seed {seed} {kind}: max {max(vals):.3f} median {np.median(vals):.3f}")


if __name__ == "__main__":
    main()
