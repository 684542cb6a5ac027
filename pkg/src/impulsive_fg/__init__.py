"""Faedo-Galerkin approximation of impulsive retarded parabolic equations."""
from .galerkin import (ConvergenceReport, GalerkinSolution, cauchy_matrix, convergence_report,
                       faedo_galerkin, rate_fit, weighted_coefficient_error)
from .problem import (AssumptionReport, HistoryFunction, ImpulseMap, Nonlinearity, PartitionError,
                      ProblemSpec, Segment, TimePartition, compute_assumption_report, history_segment)
from .solver import (PicardNonConvergence, SolverConfig, Trajectory, flow_piece, impulse_piece,
                     quadrature_weights, solve)
from .spectral import (SemigroupBounds, SpectralDomainError, Spectrum, alpha_norm,
                       check_operator_bounds, fractional_power_apply, project, semigroup_apply)

__version__ = "0.1.0"
