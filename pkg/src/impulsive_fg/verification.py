"""Bundled property checks behind ``impulsive-fg verify``."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .heat1d import fd_oracle, l2_distance
from .problem import compute_assumption_report, sample_lipschitz
from .solver import mild_residual, solve
from .spectral import SemigroupBounds, alpha_norm, check_operator_bounds, smoothing_tightness

log = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": f"{self.value:.17g}",
                "threshold": f"{self.threshold:.17g}", "detail": self.detail}


def bound_samples(alpha: float, count: int = 50) -> list[tuple[float, float, float, float]]:
    """``count`` log-spaced (t, delta) pairs with nu = (1 - alpha)/2."""
    nu = 0.5 * (1.0 - alpha)
    ts = np.geomspace(1e-4, 1.0, count)
    ds = np.geomspace(1e-5, 0.5, count)[::-1]
    return [(float(t), float(d), alpha, nu) for t, d in zip(ts, ds)]


def tightness_times(spectrum, alpha: float) -> np.ndarray:
    """Dense log grid plus the exact maximisers alpha/lambda_j of each mode."""
    return np.concatenate([np.geomspace(1e-7, 1.0, 4000), alpha / spectrum.eigenvalues])


def run_checks(cfg: ExperimentConfig, oracle: bool = False) -> list[Check]:
    problem = cfg.problem()
    inst = cfg.instance()
    sp = problem.spectrum
    bounds = SemigroupBounds()
    rng = np.random.default_rng(cfg.seed)
    checks: list[Check] = []

    rep = check_operator_bounds(sp, bounds, bound_samples(cfg.alpha))
    checks.append(Check("operator_bounds", rep.passed and rep.worst_ratio <= 1.0, rep.worst_ratio, 1.0,
                        f"{len(rep.checks)} estimates on 50 (t, delta) samples"))
    tight = smoothing_tightness(sp, cfg.alpha, tightness_times(sp, cfg.alpha), bounds)
    checks.append(Check("smoothing_tightness", tight >= 0.95, tight, 0.95))

    report = compute_assumption_report(problem, cfg.alpha, bounds)
    checks.append(Check("gate_D", report.gate_D, report.D, 1.0, "contraction constant D < 1"))
    checks.append(Check("gate_Q", report.gate_Q, max(report.Q), 1.0, "all Q_i < 1"))

    # Parseval between the sine coefficients and the physical function
    v = rng.standard_normal(16) / np.arange(1, 17) ** 2
    xi = (np.arange(10000) + 0.5) / 10000
    phys = float(np.mean(inst.eval_physical(v, xi) ** 2))
    err = abs(phys - float(v @ v))
    checks.append(Check("parseval", err <= 1e-8, err, 1e-8))

    if cfg.nonlinearity == "convolution":
        k_norm = float(np.linalg.norm(inst.kernel_matrix, 2))
        checks.append(Check("kernel_norm_vs_theta", k_norm <= inst.theta, k_norm, inst.theta))

    if cfg.impulses == "rational" and problem.partition.q:
        def band(g):
            s = (np.sin(np.pi * np.outer(inst.xi, np.arange(1, 5))) @ g.standard_normal(4)) ** 2
            return inst.from_grid(g.uniform(0.0, 1.0) * s / s.max())

        worst = sample_lipschitz(lambda x: inst.rational_impulse(1, 0.5 * math.pi, x), band,
                                 lambda d: float(np.linalg.norm(d)), lambda d: float(np.linalg.norm(d)),
                                 pairs=200, seed=cfg.seed)
        checks.append(Check("impulse_lipschitz", worst <= 5.0 / 6.0, worst, 5.0 / 6.0,
                            "L^2 ratio on states with values in [0, 1]"))

    traj = solve(problem, cfg.solver_config(cfg.solve_n), report)
    ratios = [r for s in traj.picard for r in s.ratios]
    worst_ratio = max(ratios, default=0.0)
    checks.append(Check("picard_ratio", worst_ratio <= report.D + 0.05, worst_ratio, report.D + 0.05))
    iters = max(s.iterations for s in traj.picard)
    checks.append(Check("picard_iterations", iters <= 30, float(iters), 30.0))
    resid = mild_residual(traj)
    checks.append(Check("mild_residual", resid <= 2 * cfg.picard_tol, resid, 2 * cfg.picard_tol))
    if problem.partition.q:
        hmax = max(float(np.max(alpha_norm(sp, cfg.alpha, p.values)))
                   for p in traj.pieces if p.kind == "impulse")
        checks.append(Check("impulse_bound", hmax <= problem.impulses.bound, hmax, problem.impulses.bound,
                            "sup ||h_i||_alpha along the run vs declared M_h"))

    if oracle:
        fd = fd_oracle(inst, problem.partition, cfg.physical_history(), cfg.oracle_grid_points,
                       cfg.oracle_dt, snapshot_times=[problem.partition.T])
        dist = l2_distance(inst, traj.final_value(), fd.final(), fd.xi)
        checks.append(Check("fd_oracle_l2", dist <= cfg.oracle_tolerance, dist, cfg.oracle_tolerance,
                            f"spectral n={cfg.solve_n} vs {cfg.oracle_grid_points}-point grid at t=T"))
    return checks
