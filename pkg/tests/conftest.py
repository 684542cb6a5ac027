"""Shared fixtures and independent reference solvers for the test suite."""
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from impulsive_fg.config import ExperimentConfig
from impulsive_fg.problem import (HistoryFunction, Nonlinearity, ProblemSpec,
                                  TimePartition, compute_assumption_report)
from impulsive_fg.solver import SolverConfig, solve
from impulsive_fg.spectral import Spectrum


def method_of_steps(lam: float, c: float, y0: float, tau: float, T: float, max_step: float):
    """y' = -lam y + c y(t - tau), y = y0 on [-tau, 0], integrated window by window.

    Returns a callable t -> y(t) on [0, T] built from the dense outputs.
    """
    windows = []
    prev = lambda s: y0
    start = 0.0
    y_start = y0
    while start < T - 1e-15:
        end = min(start + tau, T)
        delayed = prev
        sol = solve_ivp(lambda t, y: -lam * y + c * delayed(t - tau), (start, end), [y_start],
                        method="RK45", rtol=1e-12, atol=1e-14, max_step=max_step, dense_output=True)
        dense = sol.sol
        windows.append((start, end, dense))
        y_start = float(sol.y[0, -1])
        prev = (lambda d, s0: (lambda s: y0 if s <= 0 else float(d(s)[0])))(dense, start)
        start = end

    def y(t):
        if t <= 0:
            return y0
        for a, b, d in windows:
            if t <= b + 1e-15:
                return float(d(t)[0])
        raise ValueError(t)

    return y


def linear_delay_problem(c: float = 1.0, amp: float = 1.0, size: int = 8, T: float = 1.0,
                         tau: float = 0.1) -> ProblemSpec:
    sp = Spectrum.dirichlet_laplacian(size)
    chi = np.zeros(size)
    chi[0] = amp
    return ProblemSpec(sp, TimePartition((), (), T, tau), HistoryFunction.constant(chi),
                       Nonlinearity.linear_delay(c, sp), None, "linear_delay")


@pytest.fixture(scope="session")
def default_cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def default_report(default_cfg):
    return compute_assumption_report(default_cfg.problem(), default_cfg.alpha)


@pytest.fixture(scope="session")
def default_traj(default_cfg, default_report):
    """Default heat instance solved at n = 64, dt = 5e-4."""
    return solve(default_cfg.problem(), default_cfg.solver_config(64), default_report)


@pytest.fixture
def heat_spectrum():
    return Spectrum.dirichlet_laplacian(64)


SQRT_PI = math.sqrt(math.pi)
