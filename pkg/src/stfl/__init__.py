"""Simulator and convergence analytics for spatio-temporal federated
learning over edge links with data-delivery outage and lost-model
compensation."""

from .datagen import (
    DataPoint,
    Dataset,
    MixtureComponent,
    Population,
    PopulationSpec,
    centered_population_spec,
    default_population_spec,
    empirical_jacobian,
    generate_dataset,
)
from .device import DeltaEstimate, DeviceState, draw_outage, estimate_delta, local_update, update_compensator
from .harness import (
    ConfigError,
    ContractionConfig,
    ErrorTrace,
    ExperimentConfig,
    IncapableConfigurationError,
    SweepRow,
    load_config,
    measure_time_constant,
    preset_fig2,
    preset_fig3,
    run_experiment,
    simulate,
    simulate_contraction,
    sweep_time_constant,
)
from .lossmodel import LossModel, QuadraticLoss, averaged_gradient, quadratic_gradient, quadratic_loss
from .numerics import (
    EigenResult,
    NotPositiveDefiniteError,
    cholesky,
    spectral_norm_shifted,
    sym_eigen,
)
from .server import GlobalState, Upload, parse_beta_schedule, schedule, spatial_aggregate, temporal_update
from .theory import (
    CapabilityResult,
    DeviceClassTheory,
    TheoryReport,
    build_theory_report,
    capability_check,
    covariance_bound_check,
    make_class_theory,
    optimal_alpha,
    predicted_time_constant,
    sigma_star,
)

__version__ = "0.1.0"
