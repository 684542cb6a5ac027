import math

import numpy as np
import pytest
from scipy.integrate import quad

from impulsive_fg.heat1d import (FDInstabilityError, HeatInstance, ImpulseSingularityError,
                                 default_partition, fd_oracle, l2_distance, ramp_history_physical)
from impulsive_fg.problem import Segment, TimePartition, sample_lipschitz

THETA = 0.87404556800027


@pytest.fixture(scope="module")
def inst():
    return HeatInstance(64)


def smooth_state(size=64):
    v = np.zeros(size)
    v[:3] = [0.5, -0.2, 0.1]
    return v


def test_parseval(inst):
    rng = np.random.default_rng(1)
    v = rng.standard_normal(16) / np.arange(1, 17) ** 2
    xi = (np.arange(20000) + 0.5) / 20000
    assert abs(np.mean(inst.eval_physical(v, xi) ** 2) - v @ v) <= 1e-8


def test_grid_round_trip(inst):
    v = np.random.default_rng(2).standard_normal(64)
    assert np.allclose(inst.from_grid(inst.to_grid(v)), v, atol=1e-13)
    assert np.allclose(inst.to_grid(v), inst.eval_physical(v, inst.xi), atol=1e-12)


def test_kernel_matrix_constant_kernel():
    one = HeatInstance(8, kernel=lambda r: np.ones_like(np.asarray(r, dtype=float)))
    assert one.kernel_matrix[0, 0] == pytest.approx(8 / math.pi**2, abs=1e-12)
    # even modes integrate to zero
    assert abs(one.kernel_matrix[1, 1]) < 1e-12


def test_kernel_matrix_entry_against_quad(inst):
    f = lambda x, s: math.exp(-(x - s) ** 2) * 2 * math.sin(2 * math.pi * x) * math.sin(math.pi * s)
    inner = lambda x: quad(lambda s: f(x, s), 0, 1, epsabs=1e-13)[0]
    assert inst.kernel_matrix[1, 0] == pytest.approx(quad(inner, 0, 1, epsabs=1e-13)[0], abs=1e-11)


def test_theta_and_operator_norm(inst):
    assert inst.theta == pytest.approx(THETA, abs=1e-12)
    assert np.linalg.norm(inst.kernel_matrix, 2) <= inst.theta


def test_convolution_matches_kernel_matrix(inst):
    v = smooth_state()
    seg = Segment(lambda t: v, 0.5, 0.1)
    out = inst.convolution_nonlinearity(0.5, seg)
    assert np.allclose(out, float(inst.beta(0.5)) * inst.kernel_matrix @ v)
    assert np.array_equal(inst.convolution_nonlinearity(0.5, Segment(lambda t: 0 * v, 0.5, 0.1)), 0 * v)


def test_arctan_against_quadrature(inst):
    v = smooth_state()
    seg = Segment(lambda t: v, 0.7, 0.1)
    out = inst.arctan_nonlinearity(0.7, seg, beta=2.0)
    c = 2.0 * quad(lambda s: math.sin(0.7 - s) * math.atan(inst.eval_physical(v, s)), 0, 1, epsabs=1e-14)[0]
    xi = np.linspace(0.2, 0.8, 7)
    # a constant in x, reconstructed from the truncated sine series away from the boundary
    big = HeatInstance(4096)
    full = big.arctan_nonlinearity(0.7, Segment(lambda t: np.pad(v, (0, 4096 - 64)), 0.7, 0.1), 2.0)
    assert np.allclose(big.eval_physical(full, xi), c, atol=2e-3)
    assert out[0] == pytest.approx(c * 2 * math.sqrt(2) / math.pi, rel=1e-12)


def test_arctan_zero_bound_and_lipschitz(inst):
    zero = Segment(lambda t: np.zeros(64), 0.3, 0.1)
    assert np.array_equal(inst.arctan_nonlinearity(0.3, zero), np.zeros(64))
    beta = 1.5
    big = Segment(lambda t: 100 * smooth_state(), 0.3, 0.1)
    c = inst.arctan_nonlinearity(0.3, big, beta)[0] / (2 * math.sqrt(2) / math.pi)
    assert abs(c) <= beta * math.pi / 2
    worst = sample_lipschitz(
        lambda x: inst.arctan_nonlinearity(0.3, Segment(lambda t: x, 0.3, 0.1), beta),
        lambda g: g.standard_normal(64) / np.arange(1, 65), np.linalg.norm, np.linalg.norm, pairs=1000)
    assert worst <= beta


def test_pseudo_spectral_grid_doubling(inst):
    v = smooth_state()
    fine = HeatInstance(64, grid_points=1024)
    assert inst.grid_points == 512
    assert np.max(np.abs(inst.rational_impulse(1, 0.4, v) - fine.rational_impulse(1, 0.4, v))) < 1e-8
    seg = Segment(lambda t: v, 0.5, 0.1)
    assert np.max(np.abs(inst.arctan_nonlinearity(0.5, seg) - fine.arctan_nonlinearity(0.5, seg))) < 1e-8


def test_impulse_singularity(inst):
    v = np.zeros(64)
    v[0] = -3.0
    with pytest.raises(ImpulseSingularityError):
        inst.rational_impulse(1, 0.3, v)


def test_impulse_lipschitz_on_nonnegative_states(inst):
    def band(g):
        s = (np.sin(np.pi * np.outer(inst.xi, np.arange(1, 5))) @ g.standard_normal(4)) ** 2
        return inst.from_grid(g.uniform(0.0, 1.0) * s / s.max())

    worst = sample_lipschitz(lambda x: inst.rational_impulse(1, 0.5 * math.pi, x), band,
                             np.linalg.norm, np.linalg.norm, pairs=200)
    assert worst <= 5 / 6


def test_fd_oracle_pure_heat_decay(inst):
    part = TimePartition((), (), 0.1, 0.05)
    zero_beta = HeatInstance(64, beta=lambda t: 0.0 * np.asarray(t, dtype=float))
    fd = fd_oracle(zero_beta, part, lambda th, xi: math.sqrt(2) * np.sin(math.pi * xi), 400, 1e-4)
    exact = math.exp(-math.pi**2 * 0.1) * math.sqrt(2) * np.sin(math.pi * fd.xi)
    assert np.max(np.abs(fd.final() - exact)) < 1e-3
    v = np.zeros(64)
    v[0] = math.exp(-math.pi**2 * 0.1)
    assert l2_distance(zero_beta, v, fd.final(), fd.xi) < 1e-3


def test_fd_oracle_snapshots_default_partition(inst):
    fd = fd_oracle(inst, default_partition(), ramp_history_physical(0.1), 200, 1e-3)
    assert list(fd.times) == [0.0, 0.3, 0.4, 0.6, 0.7, 1.0]
    with pytest.raises(ValueError):
        fd_oracle(inst, default_partition(), ramp_history_physical(0.1), 200, 1e-3, snapshot_times=[0.12345])


def test_fd_oracle_blowup_guard(inst):
    hot = HeatInstance(64, beta=lambda t: 1e6 + 0.0 * np.asarray(t, dtype=float))
    with pytest.raises(FDInstabilityError):
        fd_oracle(hot, TimePartition((), (), 1.0, 0.01), ramp_history_physical(0.01), 200, 1e-3, blowup=1e3)
