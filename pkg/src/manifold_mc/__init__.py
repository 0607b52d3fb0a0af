"""Simulation and verification tools for self-repelling discrete Gaussian free fields."""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    FieldConfiguration,
    LatticeShape,
    SpectralCoefficients,
    Spectrum1D,
    analyze,
    build_spectrum_1d,
    dense_laplacian,
    eigenvalue_product,
    mode_eigenvalues,
    synthesize,
)
from .gff import (  # noqa: E402
    DriftCoefficients,
    ModelParams,
    apply_drift,
    drift_coefficients,
    log_rn_derivative,
    pair_difference_variance,
    pair_difference_variances,
    sample_prior,
    sample_prior_batch,
)
from .localtime import (  # noqa: E402
    CellList,
    EnergyBreakdown,
    brute_force_energy,
    energy_by_quadrature,
    energy_delta_single_site,
    local_time_histogram,
    self_intersection_energy,
)
from .observables import (  # noqa: E402
    RadiusReport,
    ScalingFit,
    effective_radius,
    fit_scaling_exponent,
    theoretical_exponents,
)
from .mcmc import (  # noqa: E402
    ChainState,
    McmcSchedule,
    init_chain,
    metropolis_site_sweep,
    pcn_global_move,
    run_chain,
)
from .diagnostics import integrated_autocorr_time, summarize_series  # noqa: E402
from .diagnostics import summarize as diagnostics  # noqa: E402
from .bounds import (  # noqa: E402
    JensenReport,
    coefficient_sum,
    direct_log_z,
    expected_y_exact,
    i1_monte_carlo,
    i2_exact,
    jensen_lower_bound,
)
from .harness import ExperimentConfig, ResultManifest, run_sweep  # noqa: E402
