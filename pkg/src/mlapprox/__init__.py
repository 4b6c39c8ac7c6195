"""Randomized multilevel L2-approximation and integration from point values.

The package provides exact spectral models for periodic Sobolev spaces
(singular values, Fourier bases, sampling densities), the multilevel Monte
Carlo estimator of leading basis coefficients together with its explicit
error constants, the derived variance-reduced integration rule, and a
reproducible experiment harness with CSV output.
"""

from .spectral import (
    WeightSpec,
    SpectralBasis,
    mixed_sobolev,
    isotropic_sobolev,
    tensor_product,
    explicit_sigma,
    weight,
    enumerate_basis,
    preasymptotic_exponent,
    parse_weight_spec,
    write_basis_csv,
)
from .functions import (
    CoefficientFunction,
    exact_l2_error,
    hard_instance,
    weak_instance,
    random_unit_ball,
    write_coefficients_csv,
    read_coefficients_csv,
)
from .sampling import (
    RngStream,
    derive_stream,
    sample_mu,
    sample_mu_m,
    rejection_sample,
)
from .multilevel import (
    Schedule,
    Approximant,
    BoundConstants,
    bound_constants,
    multilevel_estimate,
    doubling_schedule,
    approximate,
    tolerance_schedule,
    approximate_weak,
    write_schedule_csv,
)
from .integration import (
    IntegralEstimate,
    integral_of_basis,
    exact_integral,
    variance_reduced_integral,
    direct_simulation,
    integration_bound,
    approximation_bound,
)
from .experiment import (
    ExperimentConfig,
    RunRecord,
    estimate_mse,
    estimate_integral_mse,
    analytic_single_level_mse,
    run_convergence,
    write_records_csv,
    read_config_file,
    config_from_mapping,
)

__version__ = "0.1.0"

__all__ = [
    "WeightSpec",
    "SpectralBasis",
    "mixed_sobolev",
    "isotropic_sobolev",
    "tensor_product",
    "explicit_sigma",
    "weight",
    "enumerate_basis",
    "preasymptotic_exponent",
    "parse_weight_spec",
    "write_basis_csv",
    "CoefficientFunction",
    "exact_l2_error",
    "hard_instance",
    "weak_instance",
    "random_unit_ball",
    "write_coefficients_csv",
    "read_coefficients_csv",
    "RngStream",
    "derive_stream",
    "sample_mu",
    "sample_mu_m",
    "rejection_sample",
    "Schedule",
    "Approximant",
    "BoundConstants",
    "bound_constants",
    "multilevel_estimate",
    "doubling_schedule",
    "approximate",
    "tolerance_schedule",
    "approximate_weak",
    "write_schedule_csv",
    "IntegralEstimate",
    "integral_of_basis",
    "exact_integral",
    "variance_reduced_integral",
    "direct_simulation",
    "integration_bound",
    "approximation_bound",
    "ExperimentConfig",
    "RunRecord",
    "estimate_mse",
    "estimate_integral_mse",
    "analytic_single_level_mse",
    "run_convergence",
    "write_records_csv",
    "read_config_file",
    "config_from_mapping",
]
