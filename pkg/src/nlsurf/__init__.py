"""Likelihood surfaces for gridded spatial processes.

A classifier trained to tell dependent (field, parameter) pairs from
shuffled ones estimates the likelihood up to a constant; this package
builds the training corpora, trains and calibrates the convolutional
classifier, evaluates likelihood surfaces (neural, exact Gaussian, pairwise
max-stable with curvature adjustment), and inverts them into grid MLEs and
confidence regions.
"""

from .br_pairwise import (
    AdjustmentModel,
    PairScheme,
    adjusted_surface,
    adjustment_matrix,
    build_pair_scheme,
    estimate_godambe,
    hr_exponent,
    load_adjustment,
    pairwise_log_likelihood,
    pairwise_surface,
    save_adjustment,
    semivariogram,
)
from .calibrate import (
    PlattModel,
    apply_platt,
    fit_platt,
    load_platt,
    reliability_curve,
    save_platt,
)
from .errors import (
    AdjustmentUnavailableError,
    ConfigurationError,
    FormatError,
    InvalidArgumentError,
    NlsurfError,
    NoValidPointError,
    NotPositiveDefiniteError,
    NumericError,
    TrainingDivergedError,
)
from .eval_harness import (
    EvalConfig,
    SurfaceMethod,
    run_coverage_study,
    run_estimation_study,
    run_study,
    run_timing_study,
)
from .gp_likelihood import gp_log_likelihood, gp_surface
from .grids import (
    GridSpec,
    LabeledPair,
    PairDataset,
    Parameter,
    ParameterGrid,
    SpatialField,
    Surface,
    make_parameter_grid,
)
from .inference import (
    ConfidenceRegion,
    chi2_quantile,
    confidence_region,
    grid_mle,
    log_psi,
    multi_surface,
    neural_surface,
    region_area,
)
from .neural import (
    CnnModel,
    TrainConfig,
    build_model,
    forward,
    forward_batch,
    load_model,
    save_model,
    train,
    train_with_restarts,
)
from .simulate import (
    SimConfig,
    build_first_class,
    build_pair_dataset,
    build_second_class,
    exp_covariance,
    lhs_sample,
    load_dataset,
    save_dataset,
    simulate_brown_resnick,
    simulate_gp,
)

__version__ = "0.1.0"
