"""Spectral estimation for stationary spatial point processes.

Tapered and debiased periodograms, multitaper and kernel-smoothed spectra,
isotropic (Bessel-transform) estimators, cluster and inhibition simulators,
and a reproducible benchmark harness, all in d >= 2 dimensions.
"""
from ._backend import backend_name
from .bench import (
    BandwidthRow,
    CellScore,
    DebiasFraction,
    QualityReport,
    StudyConfig,
    bandwidth_sweep,
    cell_seed,
    debias_fraction,
    read_study_config,
    run_cell,
    run_study,
    window_for_size,
)
from .core import (
    CuboidWindow,
    EstimateMeta,
    PointPattern,
    RadialEstimate,
    SpectralEstimate,
    WavenumberGrid,
    fourier_grid,
    grid_from_nodes,
    intensity_estimate,
    pair_intensity_estimate,
    radial_set_covariance,
    regular_grid,
    set_covariance,
)
from .errors import DataError, NumericalError, PointspecError
from .isotropic import (
    bessel_j,
    debiased_isotropic,
    diggle_estimator,
    hankel_transform,
    isotropic_bias,
    isotropic_expectation_oracle,
    rotavg_bartlett,
    sdf_from_pcf,
    truncate_to_minimum,
)
from .models import (
    MaternModel,
    PoissonModel,
    ThomasModel,
    deviation_f_tilde,
    matern2_intensity,
    matern2_proposal_intensity,
    model_from_spec,
    simulate,
    theoretical_pcf,
    theoretical_sdf,
)
from .smoothing import (
    MaxWavenumberFit,
    SmoothingKernel,
    bandwidth_radius,
    bandwidth_select,
    box_kernel,
    curvature_estimate,
    gaussian_template,
    kernel_smooth,
    max_wavenumber,
    multitaper,
    rotational_average,
    taper_count_select,
    theta_spectrum,
)
from .spectral import (
    ComplexDFT,
    bias_term_T,
    debias_dft,
    debiased_periodogram,
    dft,
    dft_relation_oracle,
    dft_variance_oracle,
    expected_periodogram_oracle,
    periodogram,
    poisson_cov_oracle,
    quadratic_estimator,
    subtracted_periodogram,
    variance_oracle,
)
from .tapers import (
    BoxTaper,
    HermiteRadialTaper,
    SineTaper,
    SpectralBandwidth,
    UniformPairTaper,
    cross_norm4,
    sine_taper_family,
    spectral_bandwidth,
    spectral_window,
    taper_from_spec,
    tapered_fourier_spacing,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "CuboidWindow",
    "PointPattern",
    "WavenumberGrid",
    "SpectralEstimate",
    "RadialEstimate",
    "EstimateMeta",
    "fourier_grid",
    "regular_grid",
    "grid_from_nodes",
    "intensity_estimate",
    "pair_intensity_estimate",
    "set_covariance",
    "radial_set_covariance",
    "BoxTaper",
    "SineTaper",
    "HermiteRadialTaper",
    "UniformPairTaper",
    "SpectralBandwidth",
    "sine_taper_family",
    "taper_from_spec",
    "cross_norm4",
    "spectral_window",
    "spectral_bandwidth",
    "tapered_fourier_spacing",
    "ComplexDFT",
    "dft",
    "debias_dft",
    "periodogram",
    "debiased_periodogram",
    "subtracted_periodogram",
    "quadratic_estimator",
    "bias_term_T",
    "expected_periodogram_oracle",
    "dft_relation_oracle",
    "dft_variance_oracle",
    "poisson_cov_oracle",
    "variance_oracle",
    "SmoothingKernel",
    "MaxWavenumberFit",
    "box_kernel",
    "gaussian_template",
    "multitaper",
    "kernel_smooth",
    "rotational_average",
    "theta_spectrum",
    "bandwidth_select",
    "bandwidth_radius",
    "taper_count_select",
    "curvature_estimate",
    "max_wavenumber",
    "bessel_j",
    "hankel_transform",
    "sdf_from_pcf",
    "rotavg_bartlett",
    "diggle_estimator",
    "truncate_to_minimum",
    "isotropic_bias",
    "debiased_isotropic",
    "isotropic_expectation_oracle",
    "PoissonModel",
    "ThomasModel",
    "MaternModel",
    "simulate",
    "theoretical_pcf",
    "theoretical_sdf",
    "deviation_f_tilde",
    "model_from_spec",
    "matern2_intensity",
    "matern2_proposal_intensity",
    "StudyConfig",
    "CellScore",
    "QualityReport",
    "DebiasFraction",
    "BandwidthRow",
    "window_for_size",
    "cell_seed",
    "run_cell",
    "run_study",
    "debias_fraction",
    "bandwidth_sweep",
    "read_study_config",
    "PointspecError",
    "DataError",
    "NumericalError",
    "__version__",
]
