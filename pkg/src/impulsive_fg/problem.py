"""Problem description for impulsive retarded evolution equations.

    y' = -A y + F(t, y_t)          on the flow intervals (s_i, r_{i+1}]
    y  = h_i(t, y(r_i^-))          on the impulse intervals (r_i, s_i]
    y  = chi                        on [-tau, 0]

with 0 = s_0 = r_0 < r_1 < s_1 < ... < r_q < s_q < r_{q+1} = T.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .spectral import SemigroupBounds, Spectrum, alpha_norm, project, semigroup_apply

log = logging.getLogger(__name__)


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class TimePartition:
    """Impulse onsets ``rho`` (r_1..r_q), impulse ends ``sigma`` (s_1..s_q), horizon and delay."""

    rho: tuple[float, ...]
    sigma: tuple[float, ...]
    T: float
    tau: float

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        sigma = tuple(float(s) for s in self.sigma)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", sigma)
        if len(rho) != len(sigma):
            raise PartitionError("rho and sigma must have the same length (one pair per impulse)")
        if not self.tau > 0:
            raise PartitionError(f"delay tau must be positive, got {self.tau}")
        chain = [0.0]
        for r, s in zip(rho, sigma):
            chain += [r, s]
        chain.append(float(self.T))
        for a, b in zip(chain, chain[1:]):
            if not a < b:
                raise PartitionError(
                    "partition violates the interleaving 0 = s_0 < r_1 < s_1 < r_2 < ... < s_q < T: "
                    f"found {a} >= {b} in sequence {chain}")

    @property
    def q(self) -> int:
        return len(self.rho)

    def flow_interval(self, i: int) -> tuple[float, float]:
        """(s_i, r_{i+1}] with s_0 = 0 and r_{q+1} = T."""
        start = 0.0 if i == 0 else self.sigma[i - 1]
        end = self.T if i == self.q else self.rho[i]
        return start, end

    def impulse_interval(self, i: int) -> tuple[float, float]:
        """(r_i, s_i] for i = 1..q."""
        if not 1 <= i <= self.q:
            raise IndexError(f"impulse index {i} outside 1..{self.q}")
        return self.rho[i - 1], self.sigma[i - 1]

    def onset(self, i: int) -> float:
        """r_i with r_0 = 0 and r_{q+1} = T."""
        if i == 0:
            return 0.0
        return self.T if i == self.q + 1 else self.rho[i - 1]


@dataclass(frozen=True)
class HistoryFunction:
    """Initial history chi on [-tau, 0]; ``fn(theta)`` returns a coefficient vector."""

    fn: Callable[[float], np.ndarray]
    holder_exponent: float = 1.0
    holder_constant: float | None = None

    def __call__(self, theta: float) -> np.ndarray:
        return np.asarray(self.fn(theta), dtype=float)

    @classmethod
    def constant(cls, v) -> "HistoryFunction":
        v = np.array(v, dtype=float)
        v.setflags(write=False)
        return cls(lambda theta: v, 1.0, 0.0)

    @classmethod
    def ramp(cls, v, tau: float) -> "HistoryFunction":
        """theta -> (1 + theta/tau) v, vanishing at -tau and equal to v at 0."""
        v = np.array(v, dtype=float)
        return cls(lambda theta: (1.0 + theta / tau) * v, 1.0, None)


class Segment:
    """History segment theta -> y(t + theta) on [-tau, 0].

    ``lookup`` reads the underlying trajectory at absolute time. With ``n`` set the
    segment returns P^n y(t + theta), which is how F_n(t, x) = F(t, P^n x) is formed.
    """

    __slots__ = ("lookup", "t", "tau", "n")

    def __init__(self, lookup: Callable[[float], np.ndarray], t: float, tau: float, n: int | None = None):
        self.lookup = lookup
        self.t = t
        self.tau = tau
        self.n = n

    def __call__(self, theta: float) -> np.ndarray:
        if theta > 0 or theta < -self.tau - 1e-12 * max(1.0, self.tau):
            raise ValueError(f"segment argument {theta} outside [-tau, 0] = [{-self.tau}, 0]")
        v = self.lookup(self.t + max(theta, -self.tau))
        if self.n is not None:
            v = project(self.n, v)
        return v

    def projected(self, n: int) -> "Segment":
        return Segment(self.lookup, self.t, self.tau, n if self.n is None else min(n, self.n))

    @classmethod
    def zero(cls, size: int, tau: float) -> "Segment":
        z = np.zeros(size)
        return cls(lambda s: z, 0.0, tau)


def history_segment(traj, t: float) -> Segment:
    """The segment y_t of a trajectory (anything exposing ``value_at`` and ``partition``)."""
    tau = traj.partition.tau
    if t < 0 or t > traj.defined_until + 1e-12:
        raise ValueError(f"segment time {t} outside the solved range [0, {traj.defined_until}]")
    return Segment(traj.value_at, t, tau)


@dataclass(frozen=True)
class Nonlinearity:
    """F(t, segment) -> coefficient vector, with its declared Lipschitz, Holder and growth constants."""

    evaluate: Callable[[float, Segment], np.ndarray]
    lipschitz: float
    holder_exponent: float = 1.0
    b1: float | None = None
    name: str = "F"

    def __call__(self, t: float, seg: Segment) -> np.ndarray:
        return np.asarray(self.evaluate(t, seg), dtype=float)

    @classmethod
    def zero(cls, size: int) -> "Nonlinearity":
        z = np.zeros(size)
        z.setflags(write=False)
        return cls(lambda t, seg: z, 0.0, 1.0, 0.0, "zero")

    @classmethod
    def linear_delay(cls, c: float, spectrum: Spectrum, alpha: float = 0.5) -> "Nonlinearity":
        """F(t, y_t) = c y(t - tau), Lipschitz |c| lambda_0^-alpha against the H_alpha sup norm."""
        return cls(lambda t, seg: c * seg(-seg.tau), abs(c) * spectrum[0] ** -alpha, 1.0, 0.0,
                   f"linear_delay(c={c})")


@dataclass(frozen=True)
class ImpulseMap:
    """h_i(t, v) for i = 1..q given as one callable ``fn(i, t, v)``."""

    fn: Callable[[int, float, np.ndarray], np.ndarray]
    lipschitz: tuple[float, ...]
    bound: float
    name: str = "h"

    def __call__(self, i: int, t: float, v: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(i, t, v), dtype=float)

    @classmethod
    def constant(cls, values: Sequence) -> "ImpulseMap":
        vals = [np.array(v, dtype=float) for v in values]
        return cls(lambda i, t, v: vals[i - 1], tuple(0.0 for _ in vals), 0.0, "constant")


@dataclass(frozen=True)
class ProblemSpec:
    spectrum: Spectrum
    partition: TimePartition
    history: HistoryFunction
    nonlinearity: Nonlinearity
    impulses: ImpulseMap | None = None
    name: str = "problem"

    def __post_init__(self):
        if self.partition.q and self.impulses is None:
            raise PartitionError(f"partition has {self.partition.q} impulses but no impulse map given")
        if self.impulses is not None and len(self.impulses.lipschitz) < self.partition.q:
            raise PartitionError("one impulse Lipschitz constant is needed per impulse")

    @property
    def size(self) -> int:
        return self.spectrum.size


@dataclass
class AssumptionReport:
    alpha: float
    B1: float
    chi_bar_norm: float
    L_F: float
    L_h: tuple[float, ...]
    M_h: float
    Q: list[float]
    N: list[float]
    E: list[float]
    D: float
    R: float
    L_of_R: float
    uniform_beta: float
    uniform_M: list[float] = field(default_factory=list)
    uniform_M_prime: float = math.nan

    @property
    def gate_D(self) -> bool:
        return self.D < 1.0

    @property
    def gate_Q(self) -> bool:
        return all(q < 1.0 for q in self.Q)

    @property
    def certified(self) -> bool:
        return self.gate_D and self.gate_Q

    def summary(self) -> dict:
        return {
            "alpha": self.alpha, "B1": self.B1, "chi_bar_norm": self.chi_bar_norm,
            "L_F": self.L_F, "L_h": list(self.L_h), "M_h": self.M_h,
            "Q": self.Q, "N": self.N, "E": self.E, "D": self.D, "R": self.R,
            "L_of_R": self.L_of_R, "gate_D": self.gate_D, "gate_Q": self.gate_Q,
            "uniform_beta": self.uniform_beta, "uniform_M": self.uniform_M,
            "uniform_M_prime": self.uniform_M_prime,
        }


def compute_assumption_report(
    problem: ProblemSpec,
    alpha: float,
    bounds: SemigroupBounds | None = None,
    grid: int = 1000,
    beta: float = 0.75,
) -> AssumptionReport:
    """Evaluate the constants B_1, L(R), Q_i, N_i, E_i, D, R and the D < 1, Q_i < 1 gates.

    Sup norms over [-tau, 0] and the sup_t ||(T(t) - I) chi(0)||_alpha term of N_0 are
    sampled on ``grid`` points. ``beta`` selects the exponent of the uniform A^beta bound.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    bounds = bounds or SemigroupBounds()
    sp, part = problem.spectrum, problem.partition
    F, imp = problem.nonlinearity, problem.impulses
    q, T, M = part.q, part.T, bounds.M
    Ma = bounds.M_alpha(alpha)

    thetas = np.linspace(-part.tau, 0.0, grid)
    chis = np.array([problem.history(th) for th in thetas])
    chi_bar_norm = float(np.max(alpha_norm(sp, alpha, chis)))
    chi_beta_norm = float(np.max(alpha_norm(sp, beta, chis)))
    chi0 = problem.history(0.0)
    a_chi0 = sp.lam(chi0) * chi0
    top = np.linalg.norm(a_chi0[-(sp.size // 4 or 1):])
    if top > 1e-6 * max(np.linalg.norm(a_chi0), 1e-300):
        log.warning("chi(0) carries %.3g of its A-norm in the top quarter of modes; "
                    "it may lie outside D(A) and convergence can degrade", top / np.linalg.norm(a_chi0))
    ts = np.linspace(0.0, T, grid)
    drift = max(alpha_norm(sp, alpha, semigroup_apply(sp, t, chi0) - chi0) for t in ts)

    if F.b1 is not None:
        B1 = float(F.b1)
    else:
        B1 = float(np.linalg.norm(F(0.0, Segment.zero(sp.size, part.tau))))
    L_F, eta = F.lipschitz, F.holder_exponent
    L_h = tuple(imp.lipschitz[:q]) if imp is not None else ()
    M_h = imp.bound if imp is not None else 0.0

    growth = lambda r, a: r ** (1 - a) / (1 - a)
    base = L_F * (T**eta + chi_bar_norm) + B1
    Q = [Ma * L_F * growth(part.onset(i + 1), alpha) for i in range(q + 1)]
    N = [drift + Ma * base * growth(part.onset(1), alpha)]
    N += [M * M_h + chi_bar_norm + Ma * base * growth(part.onset(i + 1), alpha) for i in range(1, q + 1)]
    E = [Ma * L_F * growth(part.onset(1), alpha)]
    E += [M * L_h[i - 1] + Ma * L_F * growth(part.onset(i + 1), alpha) for i in range(1, q + 1)]
    D = max([max(E)] + list(L_h))

    if all(qi < 1 for qi in Q):
        R = max(max(n / (1 - qi) for n, qi in zip(N, Q)), M_h + chi_bar_norm)
    else:
        R = math.inf
    L_of_R = L_F * (T**eta + R + chi_bar_norm) + B1

    Mb = bounds.M_alpha(beta)
    uniform_M = [M * chi_beta_norm + Mb * growth(part.onset(1), beta) * L_of_R]
    uniform_M += [M * M_h + Mb * growth(part.onset(i + 1), beta) * L_of_R for i in range(1, q + 1)]
    uniform_M_prime = max([chi_beta_norm, max(uniform_M), M_h])

    report = AssumptionReport(alpha, B1, chi_bar_norm, L_F, L_h, M_h, Q, N, E, D, R, L_of_R,
                              beta, uniform_M, uniform_M_prime)
    if not report.certified:
        log.warning("contraction gate failed (D=%.6g, max Q=%.6g); results are uncertified",
                    D, max(Q))
    return report


def sample_lipschitz(
    fn: Callable[[np.ndarray], np.ndarray],
    sampler: Callable[[np.random.Generator], np.ndarray],
    in_norm: Callable[[np.ndarray], float],
    out_norm: Callable[[np.ndarray], float],
    pairs: int = 1000,
    seed: int = 0,
) -> float:
    """Largest observed ratio ||fn(x) - fn(y)|| / ||x - y|| over random pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        x, y = sampler(rng), sampler(rng)
        d = in_norm(x - y)
        if d > 0:
            worst = max(worst, out_norm(fn(x) - fn(y)) / d)
    return worst
