"""Finite-dimensional matrix *-algebra toolkit.

Subalgebras of M_n with their structure theory, states and quantum
operations on them, and decision procedures for the independence
hierarchy of commuting algebra pairs: product position, faithful
product states, joint extension of states and operations, and spatial
splits through an interpolating tensor factor.
"""

from .algebra import (
    AlgebraBlock,
    MatrixStarAlgebra,
    StructureDecomposition,
    center_and_factor,
    commutant,
    conditional_expectation,
    full_matrix_algebra,
    generate_algebra,
    join,
    matrix_units,
    mutually_commute,
    scalar_algebra,
    structure_decomposition,
)
from .channels import (
    ChannelMap,
    KrausSet,
    ProjectiveMeasurement,
    StinespringDilation,
    build_channel,
    channel_from_kraus,
    choi,
    choi_matrix,
    compose,
    dual_on_states,
    extend_to_ambient,
    identity_channel,
    is_completely_positive,
    is_faithful_map,
    kraus_from_choi,
    luders_operation,
    map_from_choi,
    slice_map,
    state_prep_operation,
    stinespring_dilation,
    superop_from_kraus,
    tensor_channel,
)
from .errors import (
    AmbientMismatch,
    DomainNotFull,
    IllConditioned,
    InvalidIsomorphism,
    InvalidMeasurement,
    InvalidOperation,
    InvalidState,
    NoProductIsomorphism,
    NonHermitian,
    NotCP,
    NotCommuting,
    NotNonselective,
    NotPSD,
    NotSubalgebra,
    NotUnital,
    ParseError,
    ShapeMismatch,
    ToolkitError,
    UnknownFamily,
    ValidationError,
)
from .independence import (
    IMPLICATIONS,
    VERDICT_KEYS,
    FactorSearchOutcome,
    IndependenceReport,
    InterpolatingFactor,
    ProductIsomorphism,
    Verdict,
    check_cstar_independence,
    check_product_sense,
    check_spatial_product_sense,
    check_wstar_independence,
    check_wstar_product_sense,
    find_interpolating_factor,
    implication_violations,
    joint_extension_residuals,
    joint_operation,
    run_hierarchy_checks,
    state_preparation,
    verify_interpolating_factor,
    verify_product_transition,
)
from .numerics import DEFAULT_TOL, Tolerances
from .sampling import (
    FUZZ_FAMILIES,
    PairInstance,
    canonical_block_algebra,
    cell_pair,
    conjugate_algebra,
    fuzz_instances,
    noncommuting_pair,
    random_density,
    random_faithful_nonselective_channel,
    random_luders_channel,
    random_prep_channel,
    random_pure_density,
    random_subalgebra,
    sample_state_pairs,
    tensor_pair,
)
from .states import (
    AlgebraState,
    ExtensionOutcome,
    canonical_trace_state,
    extend_state,
    extend_state_batch,
    is_faithful,
    is_product_across,
    marginal_residual,
    product_state,
    restrict,
    state_from_density,
    state_from_values,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # numerics
    "Tolerances",
    "DEFAULT_TOL",
    # errors
    "ToolkitError",
    "ShapeMismatch",
    "NonHermitian",
    "IllConditioned",
    "AmbientMismatch",
    "NotSubalgebra",
    "InvalidState",
    "NotCommuting",
    "InvalidIsomorphism",
    "DomainNotFull",
    "NotPSD",
    "NotCP",
    "NotUnital",
    "NotNonselective",
    "InvalidMeasurement",
    "InvalidOperation",
    "NoProductIsomorphism",
    "UnknownFamily",
    "ParseError",
    "ValidationError",
    # algebra
    "MatrixStarAlgebra",
    "StructureDecomposition",
    "AlgebraBlock",
    "full_matrix_algebra",
    "scalar_algebra",
    "generate_algebra",
    "join",
    "commutant",
    "mutually_commute",
    "center_and_factor",
    "matrix_units",
    "structure_decomposition",
    "conditional_expectation",
    # channels
    "KrausSet",
    "StinespringDilation",
    "ProjectiveMeasurement",
    "ChannelMap",
    "superop_from_kraus",
    "build_channel",
    "channel_from_kraus",
    "identity_channel",
    "choi_matrix",
    "choi",
    "map_from_choi",
    "kraus_from_choi",
    "is_completely_positive",
    "is_faithful_map",
    "stinespring_dilation",
    "dual_on_states",
    "state_prep_operation",
    "luders_operation",
    "slice_map",
    "tensor_channel",
    "extend_to_ambient",
    "compose",
    # states
    "AlgebraState",
    "ExtensionOutcome",
    "canonical_trace_state",
    "state_from_values",
    "state_from_density",
    "restrict",
    "is_faithful",
    "extend_state",
    "extend_state_batch",
    "marginal_residual",
    "product_state",
    "is_product_across",
    # independence
    "Verdict",
    "ProductIsomorphism",
    "IndependenceReport",
    "InterpolatingFactor",
    "FactorSearchOutcome",
    "VERDICT_KEYS",
    "IMPLICATIONS",
    "implication_violations",
    "check_product_sense",
    "check_cstar_independence",
    "check_wstar_independence",
    "check_wstar_product_sense",
    "joint_operation",
    "state_preparation",
    "verify_interpolating_factor",
    "joint_extension_residuals",
    "verify_product_transition",
    "find_interpolating_factor",
    "check_spatial_product_sense",
    "run_hierarchy_checks",
    # sampling
    "PairInstance",
    "random_density",
    "random_pure_density",
    "canonical_block_algebra",
    "conjugate_algebra",
    "random_subalgebra",
    "tensor_pair",
    "cell_pair",
    "noncommuting_pair",
    "sample_state_pairs",
    "random_faithful_nonselective_channel",
    "random_prep_channel",
    "random_luders_channel",
    "FUZZ_FAMILIES",
    "fuzz_instances",
]
