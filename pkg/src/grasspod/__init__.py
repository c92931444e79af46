"""Prediction of POD subspaces as points on the Grassmann manifold with
constrained gradient boosting, plus the interpolation baseline, snapshot
generators and the experiment harness."""

from .baseline import InterpModel, interp_predict
from .chart import (
    BallViolationError,
    Chart,
    ChartCoverageError,
    OutOfChartError,
    RADIUS,
    build_chart,
    embed,
    select_reference,
    wrap_back,
)
from .cxgboost import (
    EmbeddedDataset,
    Ensemble,
    LeafProblem,
    SolverFailure,
    TrainConfig,
    fit,
    gradients,
    predict,
    solve_leaf_qcqp,
)
from .grassmann import (
    CutLocusError,
    GrassmannError,
    HorizontalLift,
    PodBasis,
    exp_map,
    geodesic_distance,
    log_map,
    principal_angles,
    tangent_norm,
)
from .harness import (
    Case,
    ErrorStats,
    TrainedModel,
    baseline_from_model,
    evaluate_method,
    kfold,
    relative_error,
    run_cv,
    run_split_experiment,
    split_mod3,
    train_model,
    truncation_floor,
)
from .pod import PodResult, SnapshotMatrix, compute_pod, projection_error

__version__ = "0.1.0"

__all__ = [
    "PodBasis",
    "HorizontalLift",
    "GrassmannError",
    "CutLocusError",
    "exp_map",
    "log_map",
    "principal_angles",
    "geodesic_distance",
    "tangent_norm",
    "SnapshotMatrix",
    "PodResult",
    "compute_pod",
    "projection_error",
    "Chart",
    "RADIUS",
    "build_chart",
    "embed",
    "wrap_back",
    "select_reference",
    "OutOfChartError",
    "BallViolationError",
    "ChartCoverageError",
    "TrainConfig",
    "EmbeddedDataset",
    "Ensemble",
    "LeafProblem",
    "SolverFailure",
    "gradients",
    "solve_leaf_qcqp",
    "fit",
    "predict",
    "InterpModel",
    "interp_predict",
    "ErrorStats",
    "Case",
    "TrainedModel",
    "split_mod3",
    "kfold",
    "relative_error",
    "truncation_floor",
    "train_model",
    "baseline_from_model",
    "evaluate_method",
    "run_split_experiment",
    "run_cv",
]
