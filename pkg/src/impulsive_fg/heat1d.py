"""One-dimensional heat equation with delayed convolution forcing and impulses.

    w_t = w_xx + beta(t) int_0^1 f(x - s) w(t - tau, s) ds      on flow intervals
    w   = sin(i t) w(r_i^-)/3 + w(r_i^-)/(2 + w(r_i^-))          on (r_i, s_i]
    w(t, 0) = w(t, 1) = 0

Spectral side: A = -d^2/dx^2, lambda_j = (j+1)^2 pi^2, psi_j = sqrt(2) sin((j+1) pi x).
Pointwise nonlinear maps are applied pseudo-spectrally on the interior grid
x_k = k/(M+1), k = 1..M, where the orthonormal type-I sine transform is exact.

``fd_oracle`` solves the same equation in physical space (central differences,
implicit diffusion, explicit delay) and shares no code with the spectral path.
"""
from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import fft
from scipy.linalg import interpolative, solve_banded
from scipy.special import roots_legendre

from .problem import (HistoryFunction, ImpulseMap, Nonlinearity, ProblemSpec, Segment,
                      TimePartition)
from .spectral import DEFAULT_N_MAX, Spectrum

SQRT2 = math.sqrt(2.0)


class ImpulseSingularityError(ValueError):
    """The impulse map u/(2+u) was asked to evaluate at u <= -2."""


class FDInstabilityError(RuntimeError):
    pass


def gaussian_kernel(r):
    return np.exp(-np.square(r))


def default_beta(t):
    return 0.1 * (1.0 + 0.5 * t)


def gauss_legendre_01(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(m)
    return 0.5 * (x + 1.0), 0.5 * w


class HeatInstance:
    """Dirichlet heat operator on (0, 1) with convolution kernel ``kernel`` and coefficient ``beta``.

    ``grid_points`` is the number M of interior nodes used for pseudo-spectral maps; it
    defaults to max(512, N_max) so every stored mode is resolved. The kernel matrix
    K_jk = <f * psi_k, psi_j> is computed lazily with Gauss-Legendre tensor quadrature.
    """

    def __init__(self, size: int = DEFAULT_N_MAX, kernel: Callable = gaussian_kernel,
                 beta: Callable = default_beta, grid_points: int | None = None,
                 quad_nodes: int | None = None):
        self.size = size
        self.kernel = kernel
        self.beta = beta
        self.spectrum = Spectrum.dirichlet_laplacian(size)
        self.grid_points = grid_points or max(512, size)
        if self.grid_points < size:
            raise ValueError("pseudo-spectral grid must have at least N_max interior points")
        self.quad_nodes = quad_nodes or max(128, 2 * size + 128)
        self.xi = np.arange(1, self.grid_points + 1) / (self.grid_points + 1)

    # -- physical <-> spectral -------------------------------------------------

    def basis(self, xi) -> np.ndarray:
        """psi_j(xi) as an array of shape xi.shape + (N_max,)."""
        xi = np.asarray(xi, dtype=float)
        k = np.arange(1, self.size + 1)
        return SQRT2 * np.sin(math.pi * xi[..., None] * k)

    def eval_physical(self, v: np.ndarray, xi):
        """sum_j v_j sqrt(2) sin((j+1) pi xi)."""
        v = np.asarray(v, dtype=float)
        xi = np.asarray(xi, dtype=float)
        k = np.arange(1, v.shape[-1] + 1)
        out = np.sin(math.pi * xi[..., None] * k) @ v * SQRT2
        return float(out) if out.ndim == 0 else out

    def to_grid(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        m = self.grid_points
        padded = np.zeros(m)
        padded[: v.size] = v[:m]
        return math.sqrt(m + 1) * fft.dst(padded, type=1, norm="ortho")

    def from_grid(self, u: np.ndarray) -> np.ndarray:
        a = fft.dst(np.asarray(u, dtype=float), type=1, norm="ortho") / math.sqrt(self.grid_points + 1)
        return a[: self.size]

    # -- convolution forcing ---------------------------------------------------

    @functools.cached_property
    def kernel_matrix(self) -> np.ndarray:
        x, w = gauss_legendre_01(self.quad_nodes)
        psi = self.basis(x)
        fmat = self.kernel(x[:, None] - x[None, :])
        inner = fmat @ (w[:, None] * psi)          # (f * psi_k)(x_a)
        return psi.T @ (w[:, None] * inner)

    @functools.cached_property
    def theta(self) -> float:
        """Theta = (int_0^1 int_0^1 f(x - s)^2 ds dx)^(1/2)."""
        x, w = gauss_legendre_01(256)
        return float(math.sqrt(w @ self.kernel(x[:, None] - x[None, :]) ** 2 @ w))

    def beta_sup(self, T: float, samples: int = 2001) -> float:
        return float(np.max(np.abs(self.beta(np.linspace(0.0, T, samples)))))

    def convolution_nonlinearity(self, t: float, seg: Segment) -> np.ndarray:
        """beta(t) K y(t - tau)."""
        b = float(self.beta(t))
        x = seg(-seg.tau)
        nz = np.flatnonzero(x)
        if b == 0.0 or nz.size == 0:
            return np.zeros(self.size)
        top = nz[-1] + 1
        return b * (self.kernel_matrix[:, :top] @ x[:top])

    def convolution_lipschitz(self, T: float, alpha: float = 0.5) -> float:
        """sup|beta| Theta ||A^-alpha||, the Lipschitz constant against the H_alpha sup norm."""
        return self.beta_sup(T) * self.theta * self.spectrum[0] ** -alpha

    def nonlinearity(self, T: float, alpha: float = 0.5, lipschitz: float | None = None) -> Nonlinearity:
        L = self.convolution_lipschitz(T, alpha) if lipschitz is None else lipschitz
        return Nonlinearity(self.convolution_nonlinearity, L, 1.0, 0.0, "convolution")

    # -- arctan case -----------------------------------------------------------

    def arctan_nonlinearity(self, t: float, seg: Segment, beta: float = 1.0) -> np.ndarray:
        """F(t, y_t) = int_0^1 beta sin(t - s) arctan(y(t - tau)(s)) ds, a constant in x.

        arctan(u) is analysed on the grid into all M sine modes (its odd extension is
        smooth, so the series converges fast) and integrated against sin(t - s) mode by
        mode. The constant result has coefficients c <1, psi_j>.
        """
        g = fft.dst(np.arctan(self.to_grid(seg(-seg.tau))), type=1, norm="ortho") / math.sqrt(self.grid_points + 1)
        sin_part, cos_part = self._arctan_moments
        c = beta * float(g @ (math.sin(t) * cos_part - math.cos(t) * sin_part))
        return c * self._unit_moments

    @functools.cached_property
    def _arctan_moments(self) -> tuple[np.ndarray, np.ndarray]:
        """int_0^1 sin(s) psi_k(s) ds and int_0^1 cos(s) psi_k(s) ds for k < M."""
        a = math.pi * np.arange(1, self.grid_points + 1)
        s = 0.5 * (np.sin(a - 1) / (a - 1) - np.sin(a + 1) / (a + 1))
        c = 0.5 * ((1 - np.cos(a + 1)) / (a + 1) + (1 - np.cos(a - 1)) / (a - 1))
        return SQRT2 * s, SQRT2 * c

    @functools.cached_property
    def _unit_moments(self) -> np.ndarray:
        """<1, psi_j> = sqrt(2) (1 - (-1)^k) / (k pi)."""
        k = np.arange(1, self.size + 1)
        return SQRT2 * (1 - (-1.0) ** k) / (k * math.pi)

    def arctan_problem_nonlinearity(self, beta: float = 1.0, alpha: float = 0.5) -> Nonlinearity:
        return Nonlinearity(lambda t, seg: self.arctan_nonlinearity(t, seg, beta),
                            abs(beta) * self.spectrum[0] ** -alpha, 1.0, None, "arctan")

    # -- impulses --------------------------------------------------------------

    def rational_impulse(self, i: int, t: float, v: np.ndarray) -> np.ndarray:
        """sin(i t) u/3 + u/(2 + u) applied pointwise to u = physical form of v."""
        u = self.to_grid(v)
        if np.any(u <= -2.0):
            raise ImpulseSingularityError(
                f"impulse {i}: state reaches {u.min():.6g} <= -2 where u/(2+u) is singular")
        return self.from_grid(math.sin(i * t) * u / 3.0 + u / (2.0 + u))

    def impulse_map(self, q: int, bound: float = 1.0) -> ImpulseMap:
        return ImpulseMap(self.rational_impulse, tuple([1.0 / 3.0 + 0.5] * q), bound, "rational")


def rational_impulse_pointwise(i: int, t: float, u: np.ndarray) -> np.ndarray:
    if np.any(u <= -2.0):
        raise ImpulseSingularityError(f"impulse {i}: state reaches {u.min():.6g} <= -2")
    return math.sin(i * t) * u / 3.0 + u / (2.0 + u)


# -- default experiment ---------------------------------------------------------

DEFAULT_PARTITION = dict(rho=(0.3, 0.6), sigma=(0.4, 0.7), T=1.0, tau=0.1)
DEFAULT_HISTORY_AMPLITUDE = 0.5
DEFAULT_IMPULSE_BOUND = 1.0


@functools.lru_cache(maxsize=4)
def default_instance(size: int = DEFAULT_N_MAX) -> HeatInstance:
    return HeatInstance(size)


def default_partition() -> TimePartition:
    return TimePartition(**DEFAULT_PARTITION)


def ramp_history_physical(tau: float, amplitude: float = DEFAULT_HISTORY_AMPLITUDE):
    """chi(theta, x) = (1 + theta/tau) amplitude sqrt(2) sin(pi x)."""
    def chi(theta, xi):
        return (1.0 + theta / tau) * amplitude * SQRT2 * np.sin(math.pi * np.asarray(xi))
    return chi


def default_problem(size: int = DEFAULT_N_MAX, partition: TimePartition | None = None,
                    alpha: float = 0.5, lipschitz: float | None = None,
                    history_amplitude: float = DEFAULT_HISTORY_AMPLITUDE,
                    impulse_bound: float = DEFAULT_IMPULSE_BOUND,
                    instance: HeatInstance | None = None) -> ProblemSpec:
    inst = instance or default_instance(size)
    part = partition or default_partition()
    chi0 = np.zeros(inst.size)
    chi0[0] = history_amplitude
    return ProblemSpec(
        spectrum=inst.spectrum,
        partition=part,
        history=HistoryFunction.ramp(chi0, part.tau),
        nonlinearity=inst.nonlinearity(part.T, alpha, lipschitz),
        impulses=inst.impulse_map(part.q, impulse_bound),
        name="heat1d",
    )


# -- finite-difference oracle ----------------------------------------------------

@dataclass
class FDSolution:
    xi: np.ndarray            # interior nodes
    times: np.ndarray         # snapshot times
    values: np.ndarray        # (len(times), len(xi))

    @property
    def spacing(self) -> float:
        return float(self.xi[1] - self.xi[0])

    def final(self) -> np.ndarray:
        return self.values[-1]


class _StateBuffer:
    """Time-ordered states for delayed lookups; an exact hit returns the earliest entry."""

    def __init__(self):
        self.times: list[float] = []
        self.states: list[np.ndarray] = []

    def push(self, t: float, w: np.ndarray) -> None:
        self.times.append(t)
        self.states.append(w)

    def at(self, t: float) -> np.ndarray:
        k = bisect.bisect_left(self.times, t - 1e-12)
        if k >= len(self.times):
            raise ValueError(f"delayed lookup at {t} beyond the computed range")
        if abs(self.times[k] - t) <= 1e-12 or k == 0:
            return self.states[k]
        t0, t1 = self.times[k - 1], self.times[k]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.states[k - 1] + w * self.states[k]

    def trim(self, before: float) -> None:
        k = bisect.bisect_left(self.times, before) - 2
        if k > 1000:
            del self.times[:k]
            del self.states[:k]


def fd_oracle(instance: HeatInstance, partition: TimePartition, history: Callable,
              grid_points: int = 2000, dt: float = 1e-4, impulse: Callable = rational_impulse_pointwise,
              snapshot_times=None, blowup: float = 1e8) -> FDSolution:
    """Method-of-lines solution of the heat problem in physical space.

    ``history(theta, x)`` gives the initial history, ``impulse(i, t, u)`` the pointwise
    impulse map. Second-order central differences on ``grid_points`` interior nodes,
    backward Euler for diffusion and forward evaluation of the delayed convolution.
    Returns snapshots at ``snapshot_times`` (default: every interval endpoint).
    """
    if grid_points < 100:
        raise ValueError("grid_points must be at least 100")
    m = grid_points
    dx = 1.0 / (m + 1)
    xi = np.arange(1, m + 1) * dx
    tau = partition.tau

    conv = instance.kernel(xi[:, None] - xi[None, :]) * dx
    U, S, V = interpolative.svd(conv, 1e-15)
    left_factor, right_factor = U * S, V.T

    def forcing(t, w_delayed):
        return float(instance.beta(t)) * (left_factor @ (right_factor @ w_delayed))

    if snapshot_times is None:
        marks = [0.0]
        for i in range(partition.q + 1):
            if i:
                marks += list(partition.impulse_interval(i))
            marks.append(partition.flow_interval(i)[1])
        snapshot_times = sorted(set(marks))
    snaps = {float(t): None for t in snapshot_times}

    def record(t, w):
        for s in snaps:
            if snaps[s] is None and abs(s - t) <= 1e-12:
                snaps[s] = w.copy()

    buf = _StateBuffer()

    def delayed(t):
        s = t - tau
        if s <= 0.0:
            return history(max(s, -tau), xi)
        return buf.at(s)

    def bands(h):
        r = h / dx**2
        ab = np.empty((3, m))
        ab[0] = -r
        ab[1] = 1.0 + 2.0 * r
        ab[2] = -r
        return ab

    w = np.asarray(history(0.0, xi), dtype=float)
    scale = blowup * (1.0 + float(np.max(np.abs(w))))
    t = 0.0
    buf.push(t, w)
    record(t, w)
    for i in range(partition.q + 1):
        if i:
            r, s = partition.impulse_interval(i)
            u_left = w
            steps = max(1, math.ceil((s - r) / dt - 1e-9))
            for tk in np.linspace(r, s, steps + 1):
                w = np.asarray(impulse(i, float(tk), u_left), dtype=float)
                buf.push(float(tk), w)
                record(float(tk), w)
            t = s
        start, end = partition.flow_interval(i)
        steps = max(1, math.ceil((end - start) / dt - 1e-9))
        h = (end - start) / steps
        ab = bands(h)
        for k in range(steps):
            tk = start + k * h
            rhs = w + h * forcing(tk, delayed(tk))
            w = solve_banded((1, 1), ab, rhs)
            t = start + (k + 1) * h
            if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > scale:
                raise FDInstabilityError(f"finite-difference state blew up at t={t:.6g}; reduce dt")
            buf.push(t, w)
            record(t, w)
            buf.trim(t - tau - 2 * h)
    missing = [s for s, v in snaps.items() if v is None]
    if missing:
        raise ValueError(f"snapshot times {missing} do not fall on the time grid")
    times = np.array(sorted(snaps))
    return FDSolution(xi, times, np.array([snaps[s] for s in times]))


def l2_distance(instance: HeatInstance, coeffs: np.ndarray, fd_values: np.ndarray, xi: np.ndarray) -> float:
    """Discrete L^2(0,1) distance between a spectral state and nodal values on ``xi``."""
    dx = float(xi[1] - xi[0])
    diff = instance.eval_physical(coeffs, xi) - fd_values
    return float(math.sqrt(dx * np.sum(diff * diff)))
