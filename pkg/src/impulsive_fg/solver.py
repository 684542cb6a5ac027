"""Approximate mild solutions y_n by interval-wise Picard iteration.

Impulse intervals are filled explicitly from h_i(t, P^n y(r_i^-)). On every flow
interval the map

    (phi y)(t) = T(t - start) y(start) + int_start^t T(t - s) F(s, P^n y_s) ds

is iterated to a fixed point on a uniform grid. The convolution is integrated mode by
mode with the exponential rule that is exact when F is linear between grid points.
"""
from __future__ import annotations

import bisect
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .problem import AssumptionReport, ProblemSpec, Segment, compute_assumption_report
from .spectral import SpectralDomainError, Spectrum, alpha_norm, project

log = logging.getLogger(__name__)

SMALL_Z = 1e-3
_TAYLOR_TERMS = 6


class PicardNonConvergence(RuntimeError):
    def __init__(self, interval: int, iterations: int, residual: float):
        super().__init__(f"Picard iteration on flow interval {interval} did not converge in "
                         f"{iterations} sweeps (last residual {residual:.3e})")
        self.interval = interval
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    n: int
    dt: float = 1e-3
    picard_tol: float = 1e-10
    picard_max_iter: int = 200
    alpha: float = 0.5

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("projection dimension n must be >= 0")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be >= 1")


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2, elementwise."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SMALL_Z
    zs = np.where(small, 0.0, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        em1 = np.expm1(zs)
        p1 = np.where(small, 0.0, em1 / zs)
        p2 = np.where(small, 0.0, (em1 - zs) / (zs * zs))
    if small.any():
        zz = z[small]
        t1 = np.zeros_like(zz)
        t2 = np.zeros_like(zz)
        for k in range(_TAYLOR_TERMS - 1, -1, -1):
            t1 = t1 * zz + 1.0 / math.factorial(k + 1)
            t2 = t2 * zz + 1.0 / math.factorial(k + 2)
        p1[small] = t1
        p2[small] = t2
    return p1, p2


def quadrature_weights(lam, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Weights with int_0^h e^{-lam (h - s)} l(s) ds = w_left l(0) + w_right l(h) for linear l."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0) or not h > 0:
        raise SpectralDomainError("quadrature needs lambda > 0 and h > 0")
    p1, p2 = phi_functions(-lam * h)
    return h * (p1 - p2), h * p2


def uniform_grid(start: float, end: float, dt: float) -> np.ndarray:
    steps = max(1, math.ceil((end - start) / dt - 1e-9))
    return np.linspace(start, end, steps + 1)


@dataclass
class Piece:
    """Solution on one partition interval; ``times`` includes both endpoints.

    For an impulse piece the value stored at its left endpoint r_i is the right limit
    h_i(r_i, .); the left limit y(r_i^-) lives at the end of the preceding flow piece.
    """

    kind: str
    index: int
    times: np.ndarray
    values: np.ndarray

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def interpolate(self, t: float) -> np.ndarray:
        m = self.times.size - 1
        pos = (t - self.times[0]) / (self.times[-1] - self.times[0]) * m
        k = min(max(int(math.floor(pos)), 0), m - 1)
        w = pos - k
        if w <= 0.0:
            return self.values[k]
        if w >= 1.0:
            return self.values[k + 1]
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]


@dataclass
class PicardStats:
    interval: int
    iterations: int
    residuals: list[float]
    ratios: list[float]


class Trajectory:
    """Piecewise solution on [-tau, T]: the history plus one Piece per interval.

    Lookups at an impulse onset r_i return the left limit, matching the convention
    y(r_i^-) = y(r_i) for piecewise continuous functions.
    """

    def __init__(self, problem: ProblemSpec, cfg: SolverConfig, report: AssumptionReport | None = None):
        self.problem = problem
        self.spectrum: Spectrum = problem.spectrum
        self.partition = problem.partition
        self.history = problem.history
        self.cfg = cfg
        self.report = report
        self.pieces: list[Piece] = []
        self.left_limits: dict[int, np.ndarray] = {}
        self.picard: list[PicardStats] = []
        self._ends: list[float] = []

    @property
    def n(self) -> int:
        return self.cfg.n

    @property
    def certified(self) -> bool:
        return self.report is not None and self.report.certified

    @property
    def defined_until(self) -> float:
        return self._ends[-1] if self._ends else 0.0

    def append(self, piece: Piece) -> None:
        if self.pieces and abs(piece.start - self.defined_until) > 1e-12:
            raise ValueError("pieces must be appended contiguously")
        self.pieces.append(piece)
        self._ends.append(piece.end)

    def value_at(self, t: float) -> np.ndarray:
        tau = self.partition.tau
        if t <= 0.0:
            if t < -tau - 1e-12 * max(1.0, tau):
                raise ValueError(f"time {t} precedes the history window [-{tau}, 0]")
            return self.history(max(t, -tau))
        k = bisect.bisect_left(self._ends, t - 1e-14 * max(1.0, abs(t)))
        if k == len(self.pieces):
            raise ValueError(f"time {t} beyond the solved range (0, {self.defined_until}]")
        return self.pieces[k].interpolate(t)

    def lookup_with(self, pending: Piece):
        """Lookup that reads ``pending`` on its interval and the finished pieces elsewhere."""
        start = pending.start

        def lookup(t: float) -> np.ndarray:
            if t > start:
                return pending.interpolate(t)
            return self.value_at(t)

        return lookup

    def samples(self, history_step: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """All stored grid values on [-tau, T]; jump instants appear twice (left, right limit)."""
        tau = self.partition.tau
        step = history_step or self.cfg.dt
        hist_t = uniform_grid(-tau, 0.0, step)[:-1]
        ts = [hist_t]
        vs = [np.array([self.history(th) for th in hist_t]).reshape(hist_t.size, -1)]
        for p in self.pieces:
            ts.append(p.times)
            vs.append(p.values)
        width = max(v.shape[1] for v in vs if v.size)
        vs = [np.pad(v, ((0, 0), (0, width - v.shape[1]))) if v.shape[1] < width else v for v in vs]
        return np.concatenate(ts), np.vstack(vs)

    def sup_norm(self, exponent: float) -> float:
        _, vals = self.samples()
        return float(np.max(alpha_norm(self.spectrum, exponent, vals)))

    def final_value(self) -> np.ndarray:
        return self.pieces[-1].values[-1]


def impulse_piece(i: int, left_limit: np.ndarray, problem: ProblemSpec, cfg: SolverConfig) -> Piece:
    """Values h_i(t, P^n y(r_i^-)) on the grid of [r_i, s_i]."""
    r, s = problem.partition.impulse_interval(i)
    times = uniform_grid(r, s, cfg.dt)
    x = project(cfg.n, left_limit)
    values = np.array([problem.impulses(i, t, x) for t in times])
    return Piece("impulse", i, times, values)


def flow_piece(i: int, initial: np.ndarray, start: float, end: float, traj: Trajectory,
               problem: ProblemSpec, cfg: SolverConfig) -> tuple[Piece, PicardStats]:
    """Picard fixed point of the mild-solution map on [start, end]."""
    sp = problem.spectrum
    F = problem.nonlinearity
    tau = problem.partition.tau
    lam = sp.eigenvalues
    times = uniform_grid(start, end, cfg.dt)
    h = times[1] - times[0]
    decay = np.exp(-lam * h)
    wl, wr = quadrature_weights(lam, h)
    initial = np.asarray(initial, dtype=float)

    y = np.exp(-np.outer(times - start, lam)) * initial
    residuals, ratios = [], []
    for it in range(1, cfg.picard_max_iter + 1):
        lookup = traj.lookup_with(Piece("flow", i, times, y))
        forcing = np.array([F(t, Segment(lookup, t, tau, cfg.n)) for t in times])
        y_new = np.empty_like(y)
        y_new[0] = initial
        for k in range(times.size - 1):
            y_new[k + 1] = decay * y_new[k] + wl * forcing[k] + wr * forcing[k + 1]
        res = float(np.max(alpha_norm(sp, cfg.alpha, y_new - y)))
        scale = max(1.0, float(np.max(alpha_norm(sp, cfg.alpha, y_new))))
        if residuals and residuals[-1] > 1e-12 * scale:
            ratios.append(res / residuals[-1])
        residuals.append(res)
        y = y_new
        if res < cfg.picard_tol:
            return Piece("flow", i, times, y), PicardStats(i, it, residuals, ratios)
    raise PicardNonConvergence(i, cfg.picard_max_iter, residuals[-1])


def solve(problem: ProblemSpec, cfg: SolverConfig, report: AssumptionReport | None = None) -> Trajectory:
    """Approximate solution y_n on [-tau, T] for projection dimension ``cfg.n``."""
    if cfg.n > problem.size - 1:
        raise SpectralDomainError(f"n={cfg.n} exceeds the stored resolution N_max={problem.size}")
    if report is None:
        report = compute_assumption_report(problem, cfg.alpha)
    traj = Trajectory(problem, cfg, report)
    part = problem.partition
    initial = problem.history(0.0)
    for i in range(part.q + 1):
        if i >= 1:
            left = traj.pieces[-1].values[-1].copy()
            traj.left_limits[i] = left
            imp = impulse_piece(i, left, problem, cfg)
            traj.append(imp)
            initial = imp.values[-1]
        start, end = part.flow_interval(i)
        piece, stats = flow_piece(i, initial, start, end, traj, problem, cfg)
        traj.append(piece)
        traj.picard.append(stats)

    if math.isfinite(report.R):
        ts, vals = traj.samples()
        chi0 = problem.history(0.0)
        chibar = np.array([problem.history(t) if t <= 0 else chi0 for t in ts])
        dist = float(np.max(alpha_norm(problem.spectrum, cfg.alpha, vals - chibar)))
        if dist > report.R:
            log.warning("solution leaves the ball B_R around chi-bar (distance %.6g > R=%.6g)",
                        dist, report.R)
    return traj


def mild_residual(traj: Trajectory) -> float:
    """Largest H_alpha gap between stored values and one more application of the map."""
    problem, cfg = traj.problem, traj.cfg
    sp, F, tau = problem.spectrum, problem.nonlinearity, problem.partition.tau
    lam = sp.eigenvalues
    worst = 0.0
    for p in traj.pieces:
        if p.kind == "impulse":
            x = project(cfg.n, traj.left_limits[p.index])
            redo = np.array([problem.impulses(p.index, t, x) for t in p.times])
        else:
            h = p.times[1] - p.times[0]
            decay = np.exp(-lam * h)
            wl, wr = quadrature_weights(lam, h)
            forcing = np.array([F(t, Segment(traj.value_at, t, tau, cfg.n)) for t in p.times])
            redo = np.empty_like(p.values)
            redo[0] = p.values[0]
            for k in range(p.times.size - 1):
                redo[k + 1] = decay * redo[k] + wl * forcing[k] + wr * forcing[k + 1]
        worst = max(worst, float(np.max(alpha_norm(sp, cfg.alpha, redo - p.values))))
    return worst


def export_trajectory(traj: Trajectory, directory, max_mode: int | None = None) -> Path:
    """Write ``trajectory.csv`` (t, j, coeff) and ``manifest.json`` into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    modes = traj.spectrum.size if max_mode is None else min(max_mode + 1, traj.spectrum.size)
    part = traj.partition
    manifest = {
        "partition": {"rho": list(part.rho), "sigma": list(part.sigma), "T": part.T, "tau": part.tau},
        "solver": {"n": traj.cfg.n, "dt": traj.cfg.dt, "alpha": traj.cfg.alpha,
                   "picard_tol": traj.cfg.picard_tol},
        "modes": modes,
        "pieces": [{"kind": p.kind, "index": p.index, "start": p.start, "end": p.end,
                    "points": int(p.times.size)} for p in traj.pieces],
        "certified": traj.certified,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "trajectory.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "j", "coeff"])
        for p in traj.pieces:
            for t, v in zip(p.times, p.values):
                ts = f"{t:.17g}"
                for j in range(modes):
                    w.writerow([ts, j, f"{v[j]:.17g}"])
    return out


def load_trajectory(directory, problem: ProblemSpec) -> Trajectory:
    """Rebuild a Trajectory written by :func:`export_trajectory` (modes past the export are zero)."""
    src = Path(directory)
    manifest = json.loads((src / "manifest.json").read_text())
    s = manifest["solver"]
    cfg = SolverConfig(n=s["n"], dt=s["dt"], alpha=s["alpha"], picard_tol=s["picard_tol"])
    modes = manifest["modes"]
    data = np.loadtxt(src / "trajectory.csv", delimiter=",", skiprows=1, ndmin=2)
    traj = Trajectory(problem, cfg)
    row = 0
    for entry in manifest["pieces"]:
        npts = entry["points"]
        block = data[row: row + npts * modes]
        row += npts * modes
        times = block[::modes, 0]
        values = np.zeros((npts, problem.size))
        values[:, :modes] = block[:, 2].reshape(npts, modes)
        traj.append(Piece(entry["kind"], entry["index"], times, values))
    for p in traj.pieces:
        if p.kind == "impulse":
            traj.left_limits[p.index] = traj.value_at(p.start)
    return traj
