"""Write spacing-error time series for the figure experiments as CSV files.

fig4: published gains, eq39 leader       fig5: same with the k_v-hat column
fig6: published gains, eq40 ramp leader  fig7: synthesized gains (epsilon = 3)
fig8: nonlinear plant, synthesis plus sliding layer

One file per (figure, topology) with columns t, p_hat_1..p_hat_N.
"""

import argparse
from pathlib import Path

import numpy as np

from dagplatoon.graph import STANDARD_KINDS
from dagplatoon.presets import nonlinear_scenario, synthesis_scenario, table1_scenario
from dagplatoon.sim import eq40_profile, max_spacing_error, simulate

EXPERIMENTS = {
    "fig4": lambda kind: table1_scenario(kind),
    "fig5": lambda kind: table1_scenario(kind, unstable=True),
    "fig6": lambda kind: table1_scenario(kind, leader=eq40_profile()),
    "fig7": lambda kind: synthesis_scenario(kind, 3.0),
    "fig8": lambda kind: nonlinear_scenario(kind, epsilon=3.0, k_s=0.3),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--only", nargs="+", choices=sorted(EXPERIMENTS), default=sorted(EXPERIMENTS))
    ap.add_argument("--every", type=int, default=10, help="keep every k-th sample")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for fig in args.only:
        for kind in STANDARD_KINDS:
            traj = simulate(EXPERIMENTS[fig](kind))
            n = traj.spacing_errors.shape[1]
            data = np.column_stack([traj.t, traj.spacing_errors])[:: args.every]
            header = "t," + ",".join(f"p_hat_{i}" for i in range(1, n + 1))
            path = out / f"{fig}_{kind}.csv"
            np.savetxt(path, data, fmt="%.12g", delimiter=",", header=header, comments="")
            peak = max(max_spacing_error(traj, i) for i in range(n))
            final = np.abs(traj.spacing_errors[-1]).max()
            print(f"{path}: peak |p_hat| {peak:.3f} m, final {final:.2e} m")


if __name__ == "__main__":
    main()
