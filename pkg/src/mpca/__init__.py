"""Multiplicative-factoring PCA: reweighted robust subspace fitting plus the
KNN-accuracy benchmark harness around it."""

from .data import (
    GroundTruth,
    LabeledDataset,
    SyntheticSpec,
    load_dense,
    load_idx,
    load_isolet,
    stratified_subset,
    synthesize,
)
from .errors import FormatError, NumericalError, ProtocolError
from .evaluation import (
    MethodSpec,
    RobustnessReport,
    SplitSpec,
    SweepReport,
    dimension_sweep,
    evaluate_once,
    knn_classify,
    robustness_trial,
    stratified_split,
)
from .linalg import (
    SvdResult,
    as_matrix,
    center_columns,
    frobenius_norm,
    largest_principal_angle,
    svd,
)
from .model import (
    FitConfig,
    MpcaModel,
    cosine_factor,
    cosine_scores,
    feature_basis,
    load_model,
    mpca_fit,
    multipliers_from_raw,
    pca_fit,
    projection_scores,
    save_model,
    total_distance_factor,
    transform,
    weighted_loss,
)

__version__ = "0.1.0"

__all__ = [
    "FitConfig",
    "FormatError",
    "GroundTruth",
    "LabeledDataset",
    "MethodSpec",
    "MpcaModel",
    "NumericalError",
    "ProtocolError",
    "RobustnessReport",
    "SplitSpec",
    "SvdResult",
    "SweepReport",
    "SyntheticSpec",
    "as_matrix",
    "center_columns",
    "cosine_factor",
    "cosine_scores",
    "dimension_sweep",
    "evaluate_once",
    "feature_basis",
    "frobenius_norm",
    "knn_classify",
    "largest_principal_angle",
    "load_dense",
    "load_idx",
    "load_isolet",
    "load_model",
    "mpca_fit",
    "multipliers_from_raw",
    "pca_fit",
    "projection_scores",
    "robustness_trial",
    "save_model",
    "stratified_split",
    "stratified_subset",
    "svd",
    "synthesize",
    "total_distance_factor",
    "transform",
    "weighted_loss",
]
