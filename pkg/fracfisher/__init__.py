"""Fractional calculus on uniform grids and the relative fractional Fisher
information of densities attracted to symmetric stable laws."""

from .attraction import (
    attraction_remainder,
    finiteness_certificate,
    fractional_moment,
    g_equivalence_check,
    g_tail_exponent,
    h_moment_bounds,
    linnik_g_spectrum_analytic,
    linnik_h_spectrum_analytic,
)
from .clt import (
    blachman_stam_check,
    monotonicity_sweep,
    normalized_sum_density,
    product_kernel_second_moment,
    scaling_identity_check,
    smooth_with_stable,
    smoothing_contraction_check,
    u_statistic_second_moment,
    variance_drop_mc,
)
from .distributions import (
    dirac_density,
    gaussian_density,
    laplace_density,
    linnik_density,
    linnik_pointwise,
    linnik_spectrum,
    mixture_weight,
    stable_density,
    stable_eigen_residual,
    stable_spectrum,
    tail_constant_fit,
    tail_envelope_fit,
)
from .entropy import entropy_bound_check, entropy_sweep, evolve, relative_entropy_lambda
from .information import (
    fractional_score,
    relative_fisher,
    relative_fisher_gaussian,
    relative_fractional_score,
)
from .laws import mixture_moment
from .schema import (
    DensityProfile,
    ExperimentConfig,
    FisherReport,
    GridSpec,
    MixtureParams,
    RealProfile,
    SpectralProfile,
    StableOrder,
    SweepReport,
)
from .spectral import (
    convolve,
    forward_transform,
    fractional_derivative,
    inverse_transform,
    make_grid,
    read_profile_csv,
    riesz_constant,
    riesz_potential,
)

__all__ = [
    "attraction_remainder",
    "blachman_stam_check",
    "convolve",
    "DensityProfile",
    "dirac_density",
    "entropy_bound_check",
    "entropy_sweep",
    "evolve",
    "ExperimentConfig",
    "finiteness_certificate",
    "FisherReport",
    "forward_transform",
    "fractional_derivative",
    "fractional_moment",
    "fractional_score",
    "g_equivalence_check",
    "g_tail_exponent",
    "gaussian_density",
    "GridSpec",
    "h_moment_bounds",
    "inverse_transform",
    "laplace_density",
    "linnik_density",
    "linnik_g_spectrum_analytic",
    "linnik_h_spectrum_analytic",
    "linnik_pointwise",
    "linnik_spectrum",
    "make_grid",
    "mixture_moment",
    "mixture_weight",
    "MixtureParams",
    "monotonicity_sweep",
    "normalized_sum_density",
    "product_kernel_second_moment",
    "read_profile_csv",
    "RealProfile",
    "relative_entropy_lambda",
    "relative_fisher",
    "relative_fisher_gaussian",
    "relative_fractional_score",
    "riesz_constant",
    "riesz_potential",
    "scaling_identity_check",
    "smooth_with_stable",
    "smoothing_contraction_check",
    "SpectralProfile",
    "stable_density",
    "stable_eigen_residual",
    "stable_spectrum",
    "StableOrder",
    "SweepReport",
    "tail_constant_fit",
    "tail_envelope_fit",
    "u_statistic_second_moment",
    "variance_drop_mc",
]
