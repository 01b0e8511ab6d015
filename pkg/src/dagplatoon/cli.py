"""Command-line front end.

Exit codes: 0 success, 1 ``check`` found an unstable or infeasible
configuration, 2 scenario validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .control import GainSet, NoConvergence, SynthesisRecipe, stability_verdict, tracking_feasibility
from .dynamics import closed_loop_matrix
from .graph import STANDARD_KINDS, CyclicGraph, is_dag, standard_topology
from .scenario_io import ScenarioError, load_scenario, scenario_to_dict
from .sim import NotConverged, NumericalFailure, Scenario, convergence_time, max_spacing_error, simulate

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3
FMT = "%.12g"


def _override(s: Scenario, args) -> Scenario:
    changes = {}
    for flag, name in (("dt", "dt"), ("horizon", "horizon"), ("delta", "delta"), ("integrator", "integrator")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[name] = value
    try:
        return dataclasses.replace(s, **changes) if changes else s
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def _verdict_dict(s: Scenario, gains: GainSet):
    if not is_dag(s.topology):
        return {"dag": False, "note": "stability region only applies to acyclic graphs"}
    v = stability_verdict(s.design_taus, gains, s.topology)
    return {
        "dag": True,
        "stable": v.stable,
        "vehicles": [
            {"vehicle": i + 1, **dataclasses.asdict(row), "ok": row.ok, "violations": row.violations()}
            for i, row in enumerate(v.vehicles)
        ],
    }


def _feasibility_dict(s: Scenario):
    f = tracking_feasibility(s.mask, s.design_taus)
    return {
        "rank_observability": f.rank,
        "feasible": f.feasible,
        "max_sylvester_residual": max(f.sylvester_residuals),
        "max_output_residual": max(f.output_residuals),
        "note": f.note,
    }


def write_trajectory_csv(path, traj) -> None:
    n = traj.states.shape[1]
    cols = [traj.t[:, None], traj.leader]
    names = ["t", "p_0", "v_0", "a_0"]
    cols.append(traj.states.reshape(len(traj.t), -1))
    names += [f"{q}_{i}" for i in range(1, n + 1) for q in ("p", "v", "a")]
    per_follower = np.concatenate([traj.errors, traj.inputs[:, :, None]], axis=2)
    cols.append(per_follower.reshape(len(traj.t), -1))
    names += [f"{q}_{i}" for i in range(1, n + 1) for q in ("p_hat", "v_hat", "a_hat", "u")]
    np.savetxt(path, np.hstack(cols), fmt=FMT, delimiter=",", header=",".join(names), comments="")


def write_spacing_csv(path, traj) -> None:
    k, n = traj.spacing_errors.shape
    t = np.repeat(traj.t, n)
    veh = np.tile(np.arange(1, n + 1), k)
    with open(path, "w") as fh:
        fh.write("t,vehicle,spacing_error\n")
        for row in zip(t, veh, traj.spacing_errors.reshape(-1)):
            fh.write(f"{FMT % row[0]},{row[1]},{FMT % row[2]}\n")


def run_summary(s: Scenario, out: Path | None = None) -> dict:
    t0 = time.perf_counter()
    gains = s.gains()
    t_synth = time.perf_counter() - t0
    traj = simulate(s, gains)
    t_sim = time.perf_counter() - t0 - t_synth
    try:
        tc = convergence_time(traj, s.delta)
    except NotConverged:
        tc = None
    eig = np.linalg.eigvals(closed_loop_matrix(s.design_taus, gains, s.topology))
    eig = eig[np.lexsort((eig.imag, eig.real))]
    summary = {
        "scenario": scenario_to_dict(s),
        "stability": _verdict_dict(s, gains),
        "feasibility": _feasibility_dict(s),
        "gains": [list(r) for r in gains.k],
        "synthesized": isinstance(s.controller, SynthesisRecipe),
        "convergence_time": tc,
        "delta": s.delta,
        "max_spacing_error": [max_spacing_error(traj, i) for i in range(s.n)],
        "eigenvalues": [[float(z.real), float(z.imag)] for z in eig],
        "timings": {"synthesis_s": t_synth, "simulation_s": t_sim},
    }
    if out is not None:
        write_trajectory_csv(out / "trajectory.csv", traj)
        write_spacing_csv(out / "spacing_errors.csv", traj)
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def cmd_run(args) -> int:
    s = _override(load_scenario(args.scenario), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = run_summary(s, out)
    tc = summary["convergence_time"]
    print(f"wrote {out}/trajectory.csv, spacing_errors.csv, summary.json")
    print(f"T_c (delta={s.delta}): {'not converged' if tc is None else f'{tc:.2f} s'}")
    print("max spacing error per follower:", " ".join(f"{x:.3f}" for x in summary["max_spacing_error"]))
    return EXIT_OK


def cmd_check(args) -> int:
    s = load_scenario(args.scenario)
    gains = s.gains()
    f = tracking_feasibility(s.mask, s.design_taus)
    print(f"tracking feasibility: rank(Q_o) = {f.rank} -> {'feasible' if f.feasible else 'INFEASIBLE (rank(Q_o) < 2: spacing not measured)'}")
    try:
        v = stability_verdict(s.design_taus, gains, s.topology)
    except CyclicGraph as exc:
        print(f"stability region: not applicable ({exc})")
        return EXIT_CHECK_FAILED
    dp = s.topology.degree_plus_pin()
    print(f"{'veh':>3} {'d+p':>4} {'k_p':>8} {'k_v':>8} {'k_a':>8} {'k_v bound':>10} {'margin':>9}  verdict")
    for i, (row, k) in enumerate(zip(v.vehicles, gains.matrix)):
        status = "ok" if row.ok else "FAIL: " + "; ".join(row.violations())
        print(f"{i + 1:>3} {dp[i]:>4.0f} {k[0]:>8.4f} {k[1]:>8.4f} {k[2]:>8.4f} {row.kv_bound:>10.4f} {row.kv_margin:>9.4f}  {status}")
    print("platoon:", "asymptotically stable" if v.stable else "NOT asymptotically stable")
    return EXIT_OK if v.stable and f.feasible else EXIT_CHECK_FAILED


def cmd_synth(args) -> int:
    s = load_scenario(args.scenario)
    gains = s.gains()
    print("vehicle,k_p,k_v,k_a")
    for i, k in enumerate(gains.matrix, 1):
        print(f"{i}," + ",".join(FMT % x for x in k))
    return EXIT_OK


def _sweep_cell(job):
    eps, kind, base = job
    n = base.n
    alpha = base.controller.alpha[0]
    s = dataclasses.replace(base, topology=standard_topology(kind, n), controller=SynthesisRecipe.uniform(n, eps, alpha))
    try:
        return eps, kind, convergence_time(simulate(s), s.delta)
    except NotConverged:
        return eps, kind, None


def sweep(base: Scenario, epsilons, kinds, jobs: int | None = None) -> dict:
    if not isinstance(base.controller, SynthesisRecipe):
        raise ScenarioError("sweep needs a base scenario with a synthesis controller")
    grid = [(float(e), k, base) for e in epsilons for k in kinds]
    if jobs == 1 or len(grid) == 1:
        results = list(map(_sweep_cell, grid))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, grid))
    return {(e, k): tc for e, k, tc in results}


def write_sweep_csv(path, table, epsilons, kinds) -> None:
    with open(path, "w") as fh:
        fh.write("epsilon," + ",".join(kinds) + "\n")
        for e in epsilons:
            cells = [table[(float(e), k)] for k in kinds]
            fh.write(FMT % e + "," + ",".join("NotConverged" if c is None else FMT % c for c in cells) + "\n")


def cmd_sweep(args) -> int:
    base = _override(load_scenario(args.scenario), args)
    for k in args.topologies:
        if k not in STANDARD_KINDS:
            raise ScenarioError(f"unknown topology kind {k!r}")
    table = sweep(base, args.eps, args.topologies, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(out / "sweep.csv", table, args.eps, args.topologies)
    print(f"{'eps':>6} " + " ".join(f"{k:>12}" for k in args.topologies))
    for e in args.eps:
        cells = [table[(float(e), k)] for k in args.topologies]
        print(f"{e:>6g} " + " ".join(f"{'NotConverged' if c is None else f'{c:.2f}':>12}" for c in cells))
    print(f"wrote {out}/sweep.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagplatoon", description="Heterogeneous DAG platoon workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_flags(p):
        p.add_argument("--dt", type=float, help="integration step [s]")
        p.add_argument("--horizon", type=float, help="simulated time [s]")
        p.add_argument("--delta", type=float, help="T_c spacing-error threshold [m] (default 0.1)")
        p.add_argument("--integrator", choices=("rk4", "euler"))

    p = sub.add_parser("run", help="simulate a scenario and write CSV/JSON outputs")
    p.add_argument("scenario")
    p.add_argument("--out", default="out")
    sim_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="stability region and tracking feasibility, no simulation")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synth", help="print the gains a scenario resolves to")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", help="T_c over an epsilon x topology grid")
    p.add_argument("scenario")
    p.add_argument("--eps", type=float, nargs="+", default=[1.0, 3.0, 5.0, 7.0])
    p.add_argument("--topologies", nargs="+", default=list(STANDARD_KINDS))
    p.add_argument("--jobs", type=int, default=None, help="worker processes (1 = serial)")
    p.add_argument("--out", default="out")
    sim_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, NoConvergence, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
