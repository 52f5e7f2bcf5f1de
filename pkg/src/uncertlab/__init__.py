"""Numerical verification of position/velocity uncertainty bounds.

Core objects are re-exported here; the HTTP layer lives in
uncertlab.service and the command line client in uncertlab.cli.
"""

__version__ = "0.1.0"

from .numerics import (
    Grid1D,
    ScalarField,
    derivative,
    second_derivative,
    integrate,
    log_derivative,
)
from .model import (
    LambdaDistribution,
    BranchState,
    ModelState,
    VerificationReport,
)
from .kinematics import (
    velocity_field,
    deviation_field,
    effective_velocity_field,
    osmotic_velocity_field,
    quantum_potential_field,
    velocity_distribution_analytic,
)
from .checks import (
    position_second_moment,
    weighted_velocity_deviation,
    fisher_information,
    operator_momentum_variance,
    momentum_variance_decomposition,
    uncertainty_product_general,
    uncertainty_product_quantum,
    q0_optimality_sweep,
    uncertainty_chain_report,
    osmotic_uncertainty_product,
    quantum_potential_identity_report,
)
from .states import (
    StateSpec,
    build,
    default_grid,
    analytic_references,
    load_tabulated,
)
from .montecarlo import (
    SampleBatch,
    sample,
    estimate_uncertainty_product,
    velocity_histogram,
)

__all__ = [
    "__version__",
    "Grid1D",
    "ScalarField",
    "derivative",
    "second_derivative",
    "integrate",
    "log_derivative",
    "LambdaDistribution",
    "BranchState",
    "ModelState",
    "VerificationReport",
    "velocity_field",
    "deviation_field",
    "effective_velocity_field",
    "osmotic_velocity_field",
    "quantum_potential_field",
    "velocity_distribution_analytic",
    "position_second_moment",
    "weighted_velocity_deviation",
    "fisher_information",
    "operator_momentum_variance",
    "momentum_variance_decomposition",
    "uncertainty_product_general",
    "uncertainty_product_quantum",
    "q0_optimality_sweep",
    "uncertainty_chain_report",
    "osmotic_uncertainty_product",
    "quantum_potential_identity_report",
    "StateSpec",
    "build",
    "default_grid",
    "analytic_references",
    "load_tabulated",
    "SampleBatch",
    "sample",
    "estimate_uncertainty_product",
    "velocity_histogram",
]
