"""Polynomial LASSO-LARS regression of battery voltage."""
from .cv import CVResult, cross_validate_alpha, kfold_blocks
from .lars import LarsPath, lars_path, standardize
from .metrics import r2_score
from .pipeline import (ExtrapolationWarning, PipelineConfig, RegressionModel,
                       dataset_from_segments, fit_pipeline, predict, split_indices)
from .poly import PolySpec, poly_expand
from .scaling import ScalerParams, scaler_apply, scaler_fit, scaler_inverse

__all__ = [
    "CVResult", "ExtrapolationWarning", "LarsPath", "PipelineConfig", "PolySpec",
    "RegressionModel", "ScalerParams", "cross_validate_alpha", "dataset_from_segments",
    "fit_pipeline", "kfold_blocks", "lars_path", "poly_expand", "predict", "r2_score",
    "scaler_apply", "scaler_fit", "scaler_inverse", "split_indices", "standardize",
]
