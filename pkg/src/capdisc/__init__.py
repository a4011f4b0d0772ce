"""Exact spherical cap discrepancy of finite point sets on the unit sphere."""

from .capmeasure import (
    cap_measure,
    cap_measure_derivative,
    cap_measure_extended,
    normalizing_constant,
)
from .discrepancy import (
    EPS_COUNT,
    FAMILY_FULL,
    FAMILY_REDUCED,
    CapParams,
    DiscrepancyResult,
    LocalDiscrepancy,
    cap_params,
    discrepancy,
    empirical_measure,
    generalized_discrepancy,
    local_discrepancy,
)
from .errors import (
    CapDiscError,
    DegeneracyError,
    DimensionError,
    NormalizationError,
    PointSetFormatError,
)
from .optimality import (
    ActiveSet,
    OptimalityCertificate,
    active_set,
    optimality_residual,
)
from .oracle import (
    McCapEstimate,
    OracleResult,
    cap_params_alt,
    mc_cap_measure,
    oracle_discrepancy,
)
from .pointset import (
    GenericityReport,
    PointSet,
    enumerate_index_sets,
    is_generic,
    load_pointset,
    sample_uniform_sphere,
    save_pointset,
)
from .smooth import (
    GradientTable,
    LipschitzEstimate,
    beta_gradient,
    finite_difference_check,
    lipschitz_estimate,
    phi_tilde_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveSet",
    "CapDiscError",
    "CapParams",
    "DegeneracyError",
    "DimensionError",
    "DiscrepancyResult",
    "EPS_COUNT",
    "FAMILY_FULL",
    "FAMILY_REDUCED",
    "GenericityReport",
    "GradientTable",
    "LipschitzEstimate",
    "LocalDiscrepancy",
    "McCapEstimate",
    "NormalizationError",
    "OptimalityCertificate",
    "OracleResult",
    "PointSet",
    "PointSetFormatError",
    "active_set",
    "beta_gradient",
    "cap_measure",
    "cap_measure_derivative",
    "cap_measure_extended",
    "cap_params",
    "cap_params_alt",
    "discrepancy",
    "empirical_measure",
    "enumerate_index_sets",
    "finite_difference_check",
    "generalized_discrepancy",
    "is_generic",
    "lipschitz_estimate",
    "load_pointset",
    "local_discrepancy",
    "mc_cap_measure",
    "normalizing_constant",
    "optimality_residual",
    "oracle_discrepancy",
    "phi_tilde_gradient",
    "sample_uniform_sphere",
    "save_pointset",
    "__version__",
]
