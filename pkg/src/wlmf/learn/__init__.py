"""Feature scaling, SVM training, metrics and model selection."""

from .metrics import EvalReport, evaluate, f_beta_score, roc_curve, trapezoid_auc, write_roc_csv
from .model_selection import CellResult, GridReport, GridSpec, cross_validate_grid, stratified_folds
from .scaling import FeatureVector, ScalerParams, fit_scaler, stack, standardize
from .svm import (
    Kernel,
    SvmConvergenceError,
    SvmModel,
    SvmParams,
    decision_scores,
    kkt_residual,
    predict,
    train_svm,
)

__all__ = [
    "CellResult",
    "EvalReport",
    "FeatureVector",
    "GridReport",
    "GridSpec",
    "Kernel",
    "ScalerParams",
    "SvmConvergenceError",
    "SvmModel",
    "SvmParams",
    "cross_validate_grid",
    "decision_scores",
    "evaluate",
    "f_beta_score",
    "fit_scaler",
    "kkt_residual",
    "predict",
    "roc_curve",
    "stack",
    "standardize",
    "stratified_folds",
    "train_svm",
    "trapezoid_auc",
    "write_roc_csv",
]
