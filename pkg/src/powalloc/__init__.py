"""Minimax Type-2 error allocation of a subject budget across experiments."""

from powalloc.errors import ConfigError, DomainError, NumericError, PreconditionError
from powalloc.pair import (
    PairInstance,
    PairOptimum,
    conf_optimum,
    coverage_H,
    critical_threshold,
    exp_optimum,
    maximizer_r,
    tol_optimum,
)
from powalloc.power import (
    AllocationResult,
    ExperimentSpec,
    Pilot,
    Portfolio,
    allocation_with_corrections,
    mse_optimal_allocation,
    optimal_max_type2,
    power_optimal_allocation,
    realized_max_type2,
    type2_error,
)
from powalloc.simulate import (
    SimulationReport,
    StudyConfig,
    compare_known_sigma,
    compare_unknown_sigma,
    exp_rstar_sweep,
    preset,
    sample_pilot_sd,
    tol_conf_rstar_sweep,
)
from powalloc.special import BACKEND
from powalloc.surrogate import (
    CorrectionPlan,
    ScalingPair,
    kappa,
    kappa_inverse,
    scaling_factors,
    solve_r_conf,
    solve_r_exp,
    solve_r_tol,
    surrogate_objective_beta,
    surrogate_s_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "allocation_with_corrections",
    "AllocationResult",
    "BACKEND",
    "compare_known_sigma",
    "compare_unknown_sigma",
    "conf_optimum",
    "ConfigError",
    "CorrectionPlan",
    "coverage_H",
    "critical_threshold",
    "DomainError",
    "exp_optimum",
    "exp_rstar_sweep",
    "ExperimentSpec",
    "kappa",
    "kappa_inverse",
    "maximizer_r",
    "mse_optimal_allocation",
    "NumericError",
    "optimal_max_type2",
    "PairInstance",
    "PairOptimum",
    "Pilot",
    "Portfolio",
    "power_optimal_allocation",
    "PreconditionError",
    "preset",
    "realized_max_type2",
    "sample_pilot_sd",
    "scaling_factors",
    "ScalingPair",
    "SimulationReport",
    "solve_r_conf",
    "solve_r_exp",
    "solve_r_tol",
    "StudyConfig",
    "surrogate_objective_beta",
    "surrogate_s_pipeline",
    "tol_conf_rstar_sweep",
    "tol_optimum",
    "type2_error",
]
