"""Hybrid RSS/AOA localization with heterogeneous anchors.

Measurement synthesis, closed-form weighted least-squares estimators
(including a two-stage residual-variance-weighted solver), Fisher
information error bounds, and a Monte-Carlo benchmark harness with a CLI.
"""

from .bench import (
    RmseReport,
    ScenarioConfig,
    run_monte_carlo,
    runtime_profile,
    sweep_parameter,
)
from .crlb import CrlbGrid, GridSpec, SingularFisherError, crlb, crlb_heatmap, fim
from .estimators import (
    ESTIMATORS,
    Estimate,
    LinearSystem,
    ResidualStats,
    build_linear_system,
    compute_residuals,
    estimate_ls,
    estimate_two_stage,
    estimate_wls_d,
    residual_variances,
    solve_lwls,
    stage1_weights,
)
from .geometry import (
    Angles,
    CoincidentNodesError,
    PathLossParams,
    azimuth_true,
    elevation_true,
    rss_true,
    unit_vector,
)
from .synthesis import (
    AveragedMeasurements,
    HeteroNoiseSpec,
    MeasurementSeries,
    NoiseProfile,
    SeriesFormatError,
    generate_series,
    read_series_csv,
    sample_noise_profiles,
    time_average,
    write_series_csv,
)

__version__ = "0.1.0"
