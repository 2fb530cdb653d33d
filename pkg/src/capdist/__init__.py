"""Capacity of state-dependent channels under an estimation-cost budget.

The transmitter both communicates and, from the channel output it observes,
estimates the channel state; `capdist` computes the best information rate
compatible with a bound on the average estimation distortion, plus the
closed forms, limits, robust variants, and Monte Carlo checks around it.
"""

from .channel import (
    ChannelModel,
    EstimatorPolicy,
    InputDistribution,
    average_cost,
    block_to_super_symbol,
    mutual_information,
    optimal_estimator,
    output_marginal,
    state_posterior,
    validate_channel,
)
from .analytic import (
    additive_mod2_capacity,
    additive_mod2_model,
    binary_entropy,
    block_cd_closed_form,
    block_multiplicative_model,
    block_zero_budget_rate,
    case1_predicate,
    scalar_cd_closed_form,
    scalar_multiplicative_model,
    scalar_small_d_slope,
    training_rate,
)
from .solver import (
    CDCurve,
    CDPoint,
    CostConstraint,
    SolverOptions,
    batch_mutual_information,
    capacity_distortion_point,
    cd_curve,
    feasible_range,
    grid_search_capacity,
    lagrangian_ba_step,
    multi_constraint_point,
)
from .extensions import (
    CompoundFamily,
    CompoundResult,
    CpudResult,
    batch_mutual_information_multi,
    compound_cd,
    cpud_ratio_formula,
    cpud_sup_definition,
)
from .simulate import (
    FactorizationReport,
    SimulationReport,
    check_factorization,
    mi_jackknife_std,
    plugin_mi,
    simulate,
)
from .errors import (
    AlphabetOverflow,
    AlphabetTooLarge,
    CapdistError,
    ConvergenceWarning,
    DimensionMismatch,
    InfeasibleConstraints,
    InfeasibleDistortion,
    NegativeDistortion,
    NoZeroCostLetter,
    NotAProbability,
    NotCertified,
    SolverNonmonotone,
    ZeroProbabilityConditioning,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelModel",
    "EstimatorPolicy",
    "InputDistribution",
    "average_cost",
    "block_to_super_symbol",
    "mutual_information",
    "optimal_estimator",
    "output_marginal",
    "state_posterior",
    "validate_channel",
    "additive_mod2_capacity",
    "additive_mod2_model",
    "binary_entropy",
    "block_cd_closed_form",
    "block_multiplicative_model",
    "block_zero_budget_rate",
    "case1_predicate",
    "scalar_cd_closed_form",
    "scalar_multiplicative_model",
    "scalar_small_d_slope",
    "training_rate",
    "CDCurve",
    "CDPoint",
    "CostConstraint",
    "SolverOptions",
    "batch_mutual_information",
    "batch_mutual_information_multi",
    "capacity_distortion_point",
    "cd_curve",
    "feasible_range",
    "grid_search_capacity",
    "lagrangian_ba_step",
    "multi_constraint_point",
    "CompoundFamily",
    "CompoundResult",
    "CpudResult",
    "compound_cd",
    "cpud_ratio_formula",
    "cpud_sup_definition",
    "FactorizationReport",
    "SimulationReport",
    "check_factorization",
    "mi_jackknife_std",
    "plugin_mi",
    "simulate",
    "AlphabetOverflow",
    "AlphabetTooLarge",
    "CapdistError",
    "ConvergenceWarning",
    "DimensionMismatch",
    "InfeasibleConstraints",
    "InfeasibleDistortion",
    "NegativeDistortion",
    "NoZeroCostLetter",
    "NotAProbability",
    "NotCertified",
    "SolverNonmonotone",
    "ZeroProbabilityConditioning",
]
