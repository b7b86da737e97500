"""Sparse combinations of per-sample locally linear kernels.

Training selects a small active set of anchor-centered kernels under a Gram
cache budget; the result compresses into per-anchor linear predictors whose
inference cost is independent of the training set size.
"""

from .data import (
    Dataset,
    ScalerParams,
    gen_piecewise,
    load_csv,
    load_libsvm,
    save_libsvm,
    split,
    standardize,
)
from .estimator import LinearSdcaClassifier, MllkmClassifier
from .kernels import (
    CandidateSpec,
    ConformalMap,
    GramBlock,
    candidate_stream,
    combined_gram,
    eval_map,
    feature_map,
    gram,
    kernel_eval,
    log_gamma_grid,
)
from .mkl import KktReport, MklConfig, MklResult, sequential_mkl
from .model import (
    MllkmModel,
    compress,
    load_model,
    predict_labels,
    predict_score,
    predict_scores,
    save_model,
)
from .sdca import DualState, SdcaConfig, decision_values, dual_objective, sdca

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ScalerParams",
    "gen_piecewise",
    "load_csv",
    "load_libsvm",
    "save_libsvm",
    "split",
    "standardize",
    "LinearSdcaClassifier",
    "MllkmClassifier",
    "CandidateSpec",
    "ConformalMap",
    "GramBlock",
    "candidate_stream",
    "combined_gram",
    "eval_map",
    "feature_map",
    "gram",
    "kernel_eval",
    "log_gamma_grid",
    "KktReport",
    "MklConfig",
    "MklResult",
    "sequential_mkl",
    "MllkmModel",
    "compress",
    "load_model",
    "predict_labels",
    "predict_score",
    "predict_scores",
    "save_model",
    "DualState",
    "SdcaConfig",
    "decision_values",
    "dual_objective",
    "sdca",
]
