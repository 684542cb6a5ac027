"""Command line driver: ``impulsive-fg {solve,converge,verify,oracle-compare}``.

Exit codes: 0 success, 1 validation error, 2 solver non-convergence,
3 property-check or gate failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .galerkin import convergence_report, faedo_galerkin
from .heat1d import fd_oracle, l2_distance
from .problem import compute_assumption_report
from .solver import PicardNonConvergence, export_trajectory, solve
from .verification import run_checks

log = logging.getLogger("impulsive_fg")

EXIT_OK, EXIT_VALIDATION, EXIT_NONCONVERGENCE, EXIT_CHECK = 0, 1, 2, 3


def _fmt(obj):
    if isinstance(obj, (float, np.floating)):
        return f"{float(obj):.17g}"
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _fmt(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fmt(v) for v in obj]
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_fmt(obj), indent=2, sort_keys=True) + "\n")


def write_snapshots(path: Path, times, xi, values) -> None:
    """Physical snapshots as rows (t, xi, w)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "xi", "w"])
        for t, row in zip(times, values):
            ts = f"{t:.17g}"
            for x, val in zip(xi, row):
                w.writerow([ts, f"{x:.17g}", f"{val:.17g}"])


def snapshot_marks(cfg: ExperimentConfig) -> list[float]:
    part = cfg.partition
    marks = {0.0, part.T, *part.rho, *part.sigma}
    return sorted(marks)


def oracle_nodes(cfg: ExperimentConfig) -> np.ndarray:
    m = cfg.oracle_grid_points
    return np.arange(1, m + 1) / (m + 1)


def load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    dims = tuple(int(d) for d in args.dims.split(",")) if args.dims else None
    return cfg.with_overrides(dt=args.dt, alpha=args.alpha, seed=args.seed, dims=dims)


def cmd_solve(args, cfg: ExperimentConfig) -> int:
    n = args.n if args.n is not None else cfg.solve_n
    problem = cfg.problem()
    traj = solve(problem, cfg.solver_config(n))
    out = Path(args.out)
    export_trajectory(traj, out, max_mode=args.modes)
    xi = oracle_nodes(cfg)
    inst = cfg.instance()
    marks = snapshot_marks(cfg)
    write_snapshots(out / "snapshots.csv", marks, xi, [inst.eval_physical(traj.value_at(t), xi) for t in marks])
    write_json(out / "assumptions.json", traj.report.summary())
    print(f"solved n={n} dt={cfg.dt:.17g}: sup ||y||_alpha = {traj.sup_norm(cfg.alpha):.17g}, "
          f"certified = {traj.certified}")
    return EXIT_OK


def run_convergence(cfg: ExperimentConfig, out: Path | None = None):
    """Solve every dimension and the reference, then assemble the report (and files)."""
    problem = cfg.problem()
    report = compute_assumption_report(problem, cfg.alpha)
    dims = list(cfg.dims) + [cfg.n_ref]
    workers = max(1, min(len(dims), os.cpu_count() or 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        trajs = list(pool.map(lambda n: solve(problem, cfg.solver_config(n), report), dims))
    sols = [faedo_galerkin(t) for t in trajs]
    conv = convergence_report(sols[-1], sols[:-1], cfg.alpha)
    conv.extra["gate_passed"] = report.certified
    conv.extra["D"] = f"{report.D:.17g}"
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        conv.write_csv(out / "convergence.csv")
        (out / "summary.txt").write_text(conv.summary())
        write_json(out / "assumptions.json", report.summary())
    return conv, report


def cmd_converge(args, cfg: ExperimentConfig) -> int:
    conv, report = run_convergence(cfg, Path(args.out))
    sys.stdout.write(conv.summary())
    if not report.certified:
        log.warning("assumption gate failed: D = %.6g", report.D)
        return EXIT_CHECK
    return EXIT_OK


def cmd_verify(args, cfg: ExperimentConfig) -> int:
    checks = run_checks(cfg, oracle=args.oracle)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "verify.json", {"checks": [c.as_dict() for c in checks],
                                     "passed": all(c.passed for c in checks)})
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} value={c.value:.17g} threshold={c.threshold:.17g}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


def cmd_oracle_compare(args, cfg: ExperimentConfig) -> int:
    n = args.n if args.n is not None else cfg.solve_n
    problem = cfg.problem()
    inst = cfg.instance()
    traj = solve(problem, cfg.solver_config(n))
    marks = snapshot_marks(cfg)
    fd = fd_oracle(inst, problem.partition, cfg.physical_history(), cfg.oracle_grid_points,
                   cfg.oracle_dt, snapshot_times=marks)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spectral = [inst.eval_physical(traj.value_at(t), fd.xi) for t in fd.times]
    write_snapshots(out / "spectral_snapshots.csv", fd.times, fd.xi, spectral)
    write_snapshots(out / "oracle_snapshots.csv", fd.times, fd.xi, fd.values)
    dists = [l2_distance(inst, traj.value_at(t), row, fd.xi) for t, row in zip(fd.times, fd.values)]
    write_json(out / "comparison.json", {"times": list(fd.times), "l2_distance": dists,
                                         "final_l2_distance": dists[-1], "tolerance": cfg.oracle_tolerance})
    print(f"l2 distance at T = {dists[-1]:.17g} (tolerance {cfg.oracle_tolerance:.17g})")
    return EXIT_OK if dists[-1] <= cfg.oracle_tolerance else EXIT_CHECK


COMMANDS = {"solve": cmd_solve, "converge": cmd_converge, "verify": cmd_verify,
            "oracle-compare": cmd_oracle_compare}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="impulsive-fg", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="experiment config file (INI sections)")
    p.add_argument("--dims", help="comma-separated Galerkin dimensions, e.g. 4,8,16")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--alpha", type=float, help="fractional-power exponent of the state norm")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="seed for randomized property checks")
    p.add_argument("--oracle", action="store_true", help="verify: include the finite-difference comparison")
    p.add_argument("--n", type=int, help="projection dimension for solve / oracle-compare")
    p.add_argument("--modes", type=int, help="solve: highest mode index written to trajectory.csv")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return COMMANDS[args.command](args, cfg)
    except PicardNonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
