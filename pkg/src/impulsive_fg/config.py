"""Experiment configuration files.

INI-style text with the sections below; every value is decimal or a comma list::

    [partition]
    rho = 0.3, 0.6          ; impulse onsets r_1..r_q
    sigma = 0.4, 0.7        ; impulse ends s_1..s_q
    T = 1.0
    tau = 0.1

    [history]
    kind = ramp             ; ramp: (1 + theta/tau) chi0, constant: chi0
    amplitudes = 0.5        ; chi0 coefficients of modes 0, 1, ...

    [nonlinearity]
    kind = convolution      ; convolution | arctan | linear_delay | zero
    beta0 = 0.1             ; convolution coefficient beta(t) = beta0 + beta1 t
    beta1 = 0.05
    kernel_width = 1.0      ; f(r) = exp(-(r / width)^2)
    coefficient = 1.0       ; constant for arctan and linear_delay
    lipschitz = auto        ; declared L_F, or auto
    lipschitz_scale = 1.0   ; multiplies the declared L_F

    [impulses]
    kind = rational         ; rational | zero
    bound = 1.0             ; declared M_h

    [solver]
    n_max = 1024
    dt = 0.0005
    alpha = 0.5
    picard_tol = 1e-10
    picard_max_iter = 200

    [experiment]
    dims = 4, 8, 16, 32, 64
    n_ref = 256
    solve_n = 64
    seed = 0
    oracle_grid_points = 2000
    oracle_dt = 0.0001
    oracle_tolerance = 0.001
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .heat1d import HeatInstance
from .problem import (HistoryFunction, ImpulseMap, Nonlinearity, PartitionError, ProblemSpec,
                      TimePartition)
from .solver import SolverConfig

SECTIONS = ("partition", "history", "nonlinearity", "impulses", "solver", "experiment")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x) for x in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    text = text.strip()
    return tuple(int(x) for x in text.split(",")) if text else ()


@dataclass(frozen=True)
class ExperimentConfig:
    rho: tuple[float, ...] = (0.3, 0.6)
    sigma: tuple[float, ...] = (0.4, 0.7)
    T: float = 1.0
    tau: float = 0.1
    history_kind: str = "ramp"
    amplitudes: tuple[float, ...] = (0.5,)
    nonlinearity: str = "convolution"
    beta0: float = 0.1
    beta1: float = 0.05
    kernel_width: float = 1.0
    coefficient: float = 1.0
    lipschitz: float | None = None
    lipschitz_scale: float = 1.0
    impulses: str = "rational"
    impulse_bound: float = 1.0
    n_max: int = 1024
    dt: float = 5e-4
    alpha: float = 0.5
    picard_tol: float = 1e-10
    picard_max_iter: int = 200
    dims: tuple[int, ...] = (4, 8, 16, 32, 64)
    n_ref: int = 256
    solve_n: int = 64
    seed: int = 0
    oracle_grid_points: int = 2000
    oracle_dt: float = 1e-4
    oracle_tolerance: float = 1e-3
    _instance_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        TimePartition(self.rho, self.sigma, self.T, self.tau)
        if not self.dims:
            raise ConfigError("dims must be nonempty")
        if any(b <= a for a, b in zip(self.dims, self.dims[1:])):
            raise ConfigError(f"dims must be strictly increasing, got {list(self.dims)}")
        if self.n_ref < 4 * max(self.dims):
            raise ConfigError(f"n_ref={self.n_ref} must be at least 4 * max(dims) = {4 * max(self.dims)}")
        if self.n_ref > self.n_max - 1:
            raise ConfigError(f"n_ref={self.n_ref} exceeds the resolution n_max - 1 = {self.n_max - 1}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.history_kind not in ("ramp", "constant"):
            raise ConfigError(f"unknown history kind {self.history_kind!r}")
        if self.nonlinearity not in ("convolution", "arctan", "linear_delay", "zero"):
            raise ConfigError(f"unknown nonlinearity kind {self.nonlinearity!r}")
        if self.impulses not in ("rational", "zero"):
            raise ConfigError(f"unknown impulse kind {self.impulses!r}")
        if len(self.amplitudes) > self.n_max:
            raise ConfigError("more history amplitudes than stored modes")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    @property
    def partition(self) -> TimePartition:
        return TimePartition(self.rho, self.sigma, self.T, self.tau)

    def solver_config(self, n: int) -> SolverConfig:
        return SolverConfig(n=n, dt=self.dt, picard_tol=self.picard_tol,
                            picard_max_iter=self.picard_max_iter, alpha=self.alpha)

    def instance(self) -> HeatInstance:
        key = (self.n_max, self.beta0, self.beta1, self.kernel_width)
        if key not in self._instance_cache:
            b0, b1, width = self.beta0, self.beta1, self.kernel_width
            self._instance_cache[key] = HeatInstance(
                self.n_max,
                kernel=lambda r: np.exp(-np.square(np.asarray(r) / width)),
                beta=lambda t: b0 + b1 * np.asarray(t, dtype=float),
            )
        return self._instance_cache[key]

    def history_coefficients(self) -> np.ndarray:
        chi0 = np.zeros(self.n_max)
        chi0[: len(self.amplitudes)] = self.amplitudes
        return chi0

    def physical_history(self):
        """chi(theta, x) in physical form, for the finite-difference oracle."""
        inst, chi0 = self.instance(), self.history_coefficients()
        if self.history_kind == "ramp":
            return lambda theta, xi: (1.0 + theta / self.tau) * inst.eval_physical(chi0, xi)
        return lambda theta, xi: inst.eval_physical(chi0, xi)

    def problem(self) -> ProblemSpec:
        inst, part = self.instance(), self.partition
        sp = inst.spectrum
        chi0 = self.history_coefficients()
        history = (HistoryFunction.ramp(chi0, self.tau) if self.history_kind == "ramp"
                   else HistoryFunction.constant(chi0))
        if self.nonlinearity == "convolution":
            F = inst.nonlinearity(self.T, self.alpha)
        elif self.nonlinearity == "arctan":
            F = inst.arctan_problem_nonlinearity(self.coefficient, self.alpha)
        elif self.nonlinearity == "linear_delay":
            F = Nonlinearity.linear_delay(self.coefficient, sp, self.alpha)
        else:
            F = Nonlinearity.zero(sp.size)
        L = F.lipschitz if self.lipschitz is None else self.lipschitz
        F = replace(F, lipschitz=L * self.lipschitz_scale)
        if self.impulses == "rational":
            imp = inst.impulse_map(part.q, self.impulse_bound)
        else:
            imp = ImpulseMap.constant([np.zeros(sp.size)] * part.q) if part.q else None
        return ProblemSpec(sp, part, history, F, imp, name=f"heat1d/{self.nonlinearity}")


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    text = Path(path).read_text()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown config sections {unknown}; expected {list(SECTIONS)}")

    def get(section, key, conv, default=None):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
        return default

    kw = dict(
        rho=get("partition", "rho", _floats), sigma=get("partition", "sigma", _floats),
        T=get("partition", "T", float), tau=get("partition", "tau", float),
        history_kind=get("history", "kind", str.strip),
        amplitudes=get("history", "amplitudes", _floats),
        nonlinearity=get("nonlinearity", "kind", str.strip),
        beta0=get("nonlinearity", "beta0", float), beta1=get("nonlinearity", "beta1", float),
        kernel_width=get("nonlinearity", "kernel_width", float),
        coefficient=get("nonlinearity", "coefficient", float),
        lipschitz_scale=get("nonlinearity", "lipschitz_scale", float),
        impulses=get("impulses", "kind", str.strip), impulse_bound=get("impulses", "bound", float),
        n_max=get("solver", "n_max", int), dt=get("solver", "dt", float),
        alpha=get("solver", "alpha", float), picard_tol=get("solver", "picard_tol", float),
        picard_max_iter=get("solver", "picard_max_iter", int),
        dims=get("experiment", "dims", _ints), n_ref=get("experiment", "n_ref", int),
        solve_n=get("experiment", "solve_n", int), seed=get("experiment", "seed", int),
        oracle_grid_points=get("experiment", "oracle_grid_points", int),
        oracle_dt=get("experiment", "oracle_dt", float),
        oracle_tolerance=get("experiment", "oracle_tolerance", float),
    )
    lip = get("nonlinearity", "lipschitz", str.strip)
    if lip is not None and lip.lower() != "auto":
        try:
            kw["lipschitz"] = float(lip)
        except ValueError as exc:
            raise ConfigError(f"[nonlinearity] lipschitz = {lip!r}: {exc}") from exc
    kw = {k: v for k, v in kw.items() if v is not None}
    try:
        return ExperimentConfig(**kw)
    except PartitionError as exc:
        raise ConfigError(str(exc)) from exc


def default_config() -> ExperimentConfig:
    return ExperimentConfig()

