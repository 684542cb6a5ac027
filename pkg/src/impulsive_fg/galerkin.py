"""Faedo-Galerkin projections and convergence measurements across dimensions."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .spectral import SpectralDomainError, Spectrum, alpha_norm

log = logging.getLogger(__name__)


class GridMismatchError(SpectralDomainError):
    pass


@dataclass
class GalerkinSolution:
    """Coefficient functions alpha_j^n(t), j = 0..n, of P^n y_n on the solve grid."""

    n: int
    times: np.ndarray
    coeffs: np.ndarray          # (len(times), n + 1)
    spectrum: Spectrum
    source: object = None

    def padded(self, width: int) -> np.ndarray:
        out = np.zeros((self.times.size, width))
        out[:, : self.coeffs.shape[1]] = self.coeffs
        return out


def faedo_galerkin(traj, n: int | None = None) -> GalerkinSolution:
    """ybar_n = P^n y_n sampled on the trajectory grid (history included)."""
    n = traj.n if n is None else n
    if n < 0 or n > traj.spectrum.size - 1:
        raise SpectralDomainError(f"n={n} outside the solve resolution 0..{traj.spectrum.size - 1}")
    times, values = traj.samples()
    return GalerkinSolution(n, times, values[:, : n + 1].copy(), traj.spectrum, traj)


def _check_grids(solutions: Sequence[GalerkinSolution]) -> None:
    ref = solutions[0].times
    for s in solutions[1:]:
        if s.times.shape != ref.shape or not np.array_equal(s.times, ref):
            raise GridMismatchError("solutions were computed on different time grids (same dt required)")


def sup_difference(a: GalerkinSolution, b: GalerkinSolution, alpha: float) -> float:
    """sup_t ||ybar_a(t) - ybar_b(t)||_alpha over the shared grid."""
    _check_grids([a, b])
    width = max(a.n, b.n) + 1
    return float(np.max(alpha_norm(a.spectrum, alpha, a.padded(width) - b.padded(width))))


def cauchy_matrix(solutions: Sequence[GalerkinSolution], alpha: float) -> np.ndarray:
    """Symmetric matrix of pairwise sup-in-time H_alpha distances."""
    if len(solutions) < 3:
        raise ValueError("need at least three dimensions for a Cauchy study")
    _check_grids(solutions)
    k = len(solutions)
    out = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            out[a, b] = out[b, a] = sup_difference(solutions[a], solutions[b], alpha)
    return out


def weighted_coefficient_error(ref: GalerkinSolution, test: GalerkinSolution, alpha: float) -> float:
    """sup_t sum_{j<=n} lambda_j^{2 alpha} |alpha_j^ref(t) - alpha_j^n(t)|^2 with n = test.n."""
    if ref.n < test.n:
        raise SpectralDomainError("reference dimension must be at least the test dimension")
    _check_grids([ref, test])
    n = test.n
    lam = ref.spectrum.eigenvalues[: n + 1]
    diff = ref.coeffs[:, : n + 1] - test.coeffs
    return float(np.max(np.sum(lam ** (2 * alpha) * diff * diff, axis=1)))


@dataclass
class RateFit:
    slope: float
    intercept: float
    used: list[int]


def rate_fit(dims: Sequence[int], errors: Sequence[float], spectrum: Spectrum) -> RateFit:
    """Least-squares line through (log lambda_m, log e(m)); zero errors are dropped."""
    pts = [(m, e) for m, e in zip(dims, errors) if e > 0]
    dropped = [m for m, e in zip(dims, errors) if not e > 0]
    if dropped:
        log.warning("rate fit: dropping dimensions %s with zero error", dropped)
    if len(pts) < 3:
        raise ValueError("need at least three positive errors for a rate fit")
    x = np.log([spectrum[m] for m, _ in pts])
    y = np.log([e for _, e in pts])
    slope, intercept = np.polyfit(x, y, 1)
    return RateFit(float(slope), float(intercept), [m for m, _ in pts])


@dataclass
class ConvergenceReport:
    alpha: float
    dims: list[int]
    n_ref: int
    lambdas: list[float]
    errors: list[float]                 # e(m) = sup_t ||ybar_ref - ybar_m||_alpha
    weighted: list[float]               # W(m)
    cauchy: np.ndarray                  # pairwise e(n, m) over dims
    fit: RateFit | None
    predicted_slope: float
    extra: dict = field(default_factory=dict)

    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    def weighted_nonincreasing(self) -> bool:
        return all(b <= a for a, b in zip(self.weighted, self.weighted[1:]))

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "m", "lambda_m", "cauchy_error", "weighted_error"])
            for m, lam, e, wt in zip(self.dims, self.lambdas, self.errors, self.weighted):
                w.writerow([self.n_ref, m, f"{lam:.17g}", f"{e:.17g}", f"{wt:.17g}"])
            for a, n in enumerate(self.dims):
                for b, m in enumerate(self.dims):
                    if n > m:
                        w.writerow([n, m, f"{self.lambdas[b]:.17g}", f"{self.cauchy[a, b]:.17g}", ""])

    def summary(self) -> str:
        lines = [
            f"alpha = {self.alpha:.17g}",
            f"reference dimension = {self.n_ref}",
            f"dimensions = {' '.join(map(str, self.dims))}",
            f"errors strictly decreasing = {self.strictly_decreasing()}",
            f"weighted errors nonincreasing = {self.weighted_nonincreasing()}",
        ]
        if self.fit is not None:
            lines.append(f"fitted slope = {self.fit.slope:.17g}")
            lines.append(f"fitted intercept = {self.fit.intercept:.17g}")
        lines.append(f"predicted slope = {self.predicted_slope:.17g}")
        for k, v in sorted(self.extra.items()):
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def convergence_report(ref: GalerkinSolution, tests: Sequence[GalerkinSolution], alpha: float,
                       beta: float = 0.75) -> ConvergenceReport:
    """Errors against ``ref``, weighted coefficient errors, Cauchy matrix and rate fit."""
    tests = sorted(tests, key=lambda s: s.n)
    dims = [s.n for s in tests]
    if len(set(dims)) != len(dims):
        raise ValueError("dimensions must be distinct")
    sp = ref.spectrum
    errors = [sup_difference(ref, s, alpha) for s in tests]
    weighted = [weighted_coefficient_error(ref, s, alpha) for s in tests]
    cauchy = cauchy_matrix(tests, alpha) if len(tests) >= 3 else np.zeros((len(tests), len(tests)))
    fit = None
    if sum(e > 0 for e in errors) >= 3:
        fit = rate_fit(dims, errors, sp)
    return ConvergenceReport(alpha, dims, ref.n, [float(sp[m]) for m in dims], errors, weighted,
                             cauchy, fit, -(beta - alpha))


def decomposition_bound(traj_n, traj_m, alpha: float, beta: float) -> tuple[float, float]:
    """Both sides of sup||ybar_n - ybar_m||_a <= sup||y_n - y_m||_a + lambda_m^(a-b) sup||A^b y_m||."""
    gn, gm = faedo_galerkin(traj_n), faedo_galerkin(traj_m)
    lhs = sup_difference(gn, gm, alpha)
    _, vn = traj_n.samples()
    _, vm = traj_m.samples()
    sp = traj_n.spectrum
    rhs = float(np.max(alpha_norm(sp, alpha, vn - vm)))
    rhs += sp[traj_m.n] ** (alpha - beta) * float(np.max(alpha_norm(sp, beta, vm)))
    return lhs, rhs
