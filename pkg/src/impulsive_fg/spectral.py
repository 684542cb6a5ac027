"""Diagonal operator calculus in the eigenbasis of a positive self-adjoint operator.

A state is stored as its coefficient array against the orthonormal eigenfunctions
psi_0, psi_1, ...; the last array axis indexes modes, leading axes (e.g. time) are
broadcast. Every operator here is diagonal, so operator norms are exact maxima over
the stored modes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

DEFAULT_N_MAX = 1024


class SpectralDomainError(ValueError):
    """Raised when an operation is called outside its mathematical domain."""


@dataclass(frozen=True)
class Spectrum:
    """Nondecreasing positive eigenvalues lambda_0 <= lambda_1 <= ... truncated at ``size``."""

    eigenvalues: np.ndarray
    rule: Callable[[int], float] | None = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise SpectralDomainError("eigenvalues must be a nonempty 1-D sequence")
        if lam[0] <= 0:
            raise SpectralDomainError("lambda_0 must be positive")
        if np.any(np.diff(lam) < 0):
            raise SpectralDomainError("eigenvalues must be nondecreasing")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @classmethod
    def from_rule(cls, rule: Callable[[int], float], size: int = DEFAULT_N_MAX) -> "Spectrum":
        return cls(np.array([rule(j) for j in range(size)], dtype=float), rule)

    @classmethod
    def dirichlet_laplacian(cls, size: int = DEFAULT_N_MAX) -> "Spectrum":
        """-d^2/dx^2 on (0, 1) with zero boundary values: lambda_j = (j+1)^2 pi^2."""
        j = np.arange(size, dtype=float)
        return cls((j + 1.0) ** 2 * math.pi**2, _dirichlet_rule)

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, j):
        return self.eigenvalues[j]

    def lam(self, v: np.ndarray) -> np.ndarray:
        """Eigenvalues matching the mode axis of ``v``."""
        m = np.shape(v)[-1]
        if m > self.size:
            raise SpectralDomainError(f"vector has {m} modes, spectrum only {self.size}")
        return self.eigenvalues[:m]

    def unit(self, j: int, size: int | None = None) -> np.ndarray:
        v = np.zeros(self.size if size is None else size)
        v[j] = 1.0
        return v

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)


def _dirichlet_rule(j: int) -> float:
    return (j + 1) ** 2 * math.pi**2


def semigroup_apply(spectrum: Spectrum, t: float, v: np.ndarray) -> np.ndarray:
    """T(t)v, i.e. multiply mode j by exp(-lambda_j t)."""
    if t < 0:
        raise SpectralDomainError(f"semigroup time must be nonnegative, got {t}")
    v = np.asarray(v, dtype=float)
    return np.exp(-spectrum.lam(v) * t) * v


def fractional_power_apply(spectrum: Spectrum, alpha: float, v: np.ndarray) -> np.ndarray:
    """A^alpha v for 0 <= alpha <= 1."""
    if not 0.0 <= alpha <= 1.0:
        raise SpectralDomainError(f"fractional exponent must lie in [0, 1], got {alpha}")
    v = np.asarray(v, dtype=float)
    return spectrum.lam(v) ** alpha * v


def alpha_norm(spectrum: Spectrum, alpha: float, v: np.ndarray) -> np.ndarray | float:
    """||A^alpha v|| reduced over the mode axis; leading axes are kept."""
    if alpha < 0:
        raise SpectralDomainError(f"norm exponent must be nonnegative, got {alpha}")
    v = np.asarray(v, dtype=float)
    with np.errstate(over="raise"):
        w = spectrum.lam(v) ** alpha * v
    out = np.sqrt(np.sum(w * w, axis=-1))
    return float(out) if out.ndim == 0 else out


def scaled_norm(spectrum: Spectrum, exponent: float, v: np.ndarray):
    """||A^exponent v|| for any real exponent (negative powers included)."""
    v = np.asarray(v, dtype=float)
    w = spectrum.lam(v) ** exponent * v
    out = np.sqrt(np.sum(w * w, axis=-1))
    return float(out) if out.ndim == 0 else out


def project(n: int, v: np.ndarray) -> np.ndarray:
    """P^n v: keep modes 0..n, zero the rest."""
    if n < 0:
        raise SpectralDomainError(f"projection dimension must be >= 0, got {n}")
    v = np.array(v, dtype=float)
    v[..., n + 1:] = 0.0
    return v


def sharp_constant(x: float) -> float:
    """sup_{s>0} s^x e^{-s} = (x/e)^x, with the x = 0 value 1."""
    if x < 0:
        raise SpectralDomainError("exponent must be nonnegative")
    return 1.0 if x == 0 else (x / math.e) ** x


@dataclass(frozen=True)
class SemigroupBounds:
    """Constants of the smoothing estimates for a diagonal contraction semigroup.

    ``M`` bounds ||T(t)||; ``M_alpha(a)`` bounds t^a ||A^a T(t)||; ``M_nu_prime(nu)``
    bounds ||(T(d) - I) A^-nu|| / d^nu. The defaults are the sharp diagonal values.
    """

    M: float = 1.0

    def M_alpha(self, alpha: float) -> float:
        return sharp_constant(alpha)

    def M_nu_prime(self, nu: float) -> float:
        if not 0.0 < nu <= 1.0:
            raise SpectralDomainError("nu must lie in (0, 1]")
        return 1.0

    def M_alpha_nu(self, alpha: float, nu: float) -> float:
        return sharp_constant(alpha + nu)


@dataclass
class BoundCheck:
    kind: str
    t: float
    delta: float
    alpha: float
    nu: float
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else math.inf)

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12)


@dataclass
class BoundsReport:
    checks: list[BoundCheck]

    @property
    def worst_ratio(self) -> float:
        return max((c.ratio for c in self.checks), default=0.0)

    @property
    def flagged(self) -> list[BoundCheck]:
        return [c for c in self.checks if not c.ok]

    @property
    def passed(self) -> bool:
        return not self.flagged


def check_operator_bounds(
    spectrum: Spectrum,
    bounds: SemigroupBounds,
    samples: Iterable[tuple[float, float, float, float]],
) -> BoundsReport:
    """Compare exact diagonal operator norms with the smoothing estimates.

    Each sample ``(t, delta, alpha, nu)`` yields three checks:

    * ``smoothing``:   ||A^a T(t)||               <= M_a t^-a
    * ``continuity``:  ||(T(d) - I) A^-nu||       <= M'_nu d^nu
    * ``holder``:      ||(T(d) - I) A^a T(t)||    <= M'_nu M_{a+nu} d^nu t^-(a+nu)

    ``t`` plays the role of the gap rho - s in the two-time form of the last estimate.
    """
    lam = spectrum.eigenvalues
    checks = []
    for t, delta, alpha, nu in samples:
        if t <= 0 or delta <= 0:
            raise SpectralDomainError("sample times must be positive")
        if not alpha + nu < 1:
            raise SpectralDomainError("need alpha + nu < 1")
        smooth = float(np.max(lam**alpha * np.exp(-lam * t)))
        checks.append(BoundCheck("smoothing", t, delta, alpha, nu, smooth,
                                 bounds.M_alpha(alpha) * t**-alpha))
        jump = -np.expm1(-lam * delta)
        cont = float(np.max(jump * lam**-nu))
        checks.append(BoundCheck("continuity", t, delta, alpha, nu, cont,
                                 bounds.M_nu_prime(nu) * delta**nu))
        hold = float(np.max(jump * lam**alpha * np.exp(-lam * t)))
        rhs = bounds.M_nu_prime(nu) * bounds.M_alpha_nu(alpha, nu) * delta**nu * t ** -(alpha + nu)
        checks.append(BoundCheck("holder", t, delta, alpha, nu, hold, rhs))
    return BoundsReport(checks)


def smoothing_tightness(spectrum: Spectrum, alpha: float, times: np.ndarray,
                        bounds: SemigroupBounds | None = None) -> float:
    """sup_t t^a ||A^a T(t)|| over ``times`` divided by M_a (<= 1, near 1 when tight)."""
    bounds = bounds or SemigroupBounds()
    lam = spectrum.eigenvalues
    times = np.asarray(times, dtype=float)
    best = 0.0
    for chunk in np.array_split(times, max(1, times.size // 256)):
        vals = (chunk[:, None] * lam[None, :]) ** alpha * np.exp(-chunk[:, None] * lam[None, :])
        best = max(best, float(vals.max()))
    return best / bounds.M_alpha(alpha)
