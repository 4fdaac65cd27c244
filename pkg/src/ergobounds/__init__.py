"""Ergodicity coefficients, Markov flows, and perturbation-bound verification
on finite-dimensional state spaces."""

__version__ = "0.1.0"

from ._quad import QuadratureSettings, adaptive_simpson
from .bounds import (
    BOUND_KINDS,
    BoundInput,
    BoundReport,
    BoundRow,
    bound_alternative,
    bound_cesaro_convergence,
    bound_cesaro_pair,
    bound_fixed_point_gap,
    bound_mean_combined,
    bound_mean_ergodic,
    bound_sup_and_stationary,
    bound_trajectory,
    trajectory_branch_values,
    verify_bound,
)
from .dobrushin import (
    DeltaAxiomReport,
    DeltaResult,
    StabilityCertificate,
    check_delta_axioms,
    delta,
    delta_of_semigroup,
    floor_ratio,
    mean_ergodicity_certificate,
    stability_certificate,
)
from .errors import (
    ConsistencyError,
    DegenerateInputError,
    DimensionMismatchError,
    HypothesisNotMetError,
    InputError,
    NotAContractionError,
    OutOfDomainError,
    PreconditionError,
    RangeOverflowError,
    UnsupportedShapeError,
)
from .semigroup import (
    Semigroup,
    StationaryPoints,
    cesaro_average,
    evolve,
    integral_equation_residual,
    make_semigroup,
    stationary_points,
    time_squared_average,
    weighted_average,
    weighted_average_with_error,
)
from .spaces import (
    Classical,
    DirectSum,
    LinearMap,
    OperatorNormEstimate,
    Quantum,
    Role,
    StateSpace,
    ValidationReport,
    ZeroSumSplit,
    choi_matrix,
    coords_to_hermitian,
    decompose_zero_sum,
    functional,
    functional_vector,
    generator_map,
    hermitian_basis,
    hermitian_to_coords,
    is_in_base,
    is_in_cone,
    lift_contraction,
    map_matrix_from_action,
    markov_map,
    norm,
    operator_norm,
    operator_norm_estimate,
    rank_one_limit,
    validate_generator,
    validate_markov,
)
from .weights import (
    ClassWReport,
    ClassWVerdict,
    Constant,
    Exponential,
    Power,
    PowerLog,
    ProductWeight,
    Scaled,
    SumWeight,
    Tabulated,
    Weight,
    check_mean_ergodic_decomposition,
    combine,
    is_in_class_w,
    shift_difference_ratio,
    tabulated_from_csv,
    unique_ergodicity_check,
    verify_weighted_convergence,
    weight_from_spec,
)

__all__ = [name for name in dir() if not name.startswith("_")]
