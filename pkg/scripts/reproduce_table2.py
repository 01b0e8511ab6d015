"""Recompute the convergence-time table (epsilon x topology) and compare it
with the published values."""

import argparse
import time

from dagplatoon.cli import sweep
from dagplatoon.graph import STANDARD_KINDS
from dagplatoon.presets import CONVERGENCE_TIMES, synthesis_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--integrator", choices=("euler", "rk4"), default="euler")
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--jobs", type=int, default=None)
    args = ap.parse_args()

    base = synthesis_scenario("PF", 1.0, integrator=args.integrator, dt=args.dt)
    eps = sorted(CONVERGENCE_TIMES)
    t0 = time.perf_counter()
    table = sweep(base, eps, STANDARD_KINDS, args.jobs)
    elapsed = time.perf_counter() - t0

    print(f"{'eps':>4} " + " ".join(f"{k:>16}" for k in STANDARD_KINDS))
    worst = 0.0
    for e in eps:
        cells = []
        for kind, ref in zip(STANDARD_KINDS, CONVERGENCE_TIMES[e]):
            tc = table[(float(e), kind)]
            if tc is None:
                cells.append(f"{'NotConverged':>16}")
                continue
            worst = max(worst, abs(tc - ref))
            cells.append(f"{tc:7.2f} ({tc - ref:+.2f})")
        print(f"{e:>4} " + " ".join(f"{c:>16}" for c in cells))
    print(f"largest deviation {worst:.2f} s, {elapsed:.1f} s wall clock ({args.integrator}, dt={args.dt})")


if __name__ == "__main__":
    main()
