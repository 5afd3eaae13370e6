"""Column-wise min-max scaling onto [0, 1]."""
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, ShapeError


@dataclass(frozen=True, eq=False)
class ScalerParams:
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def ranges(self):
        return self.maxs - self.mins

    def to_dict(self):
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mins"], dtype=float), np.array(d["maxs"], dtype=float))


def _as_matrix(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D feature matrix, got shape {X.shape}")
    return X


def scaler_fit(X):
    X = _as_matrix(X)
    if X.shape[0] < 1:
        raise InsufficientDataError("scaler needs at least one row")
    return ScalerParams(X.min(axis=0), X.max(axis=0))


def scaler_apply(params, X):
    """Map each column by ``(x - min) / (max - min)``; constant columns map to 0.

    Values outside the training range are not clipped.
    """
    X = _as_matrix(X)
    if X.shape[1] != params.mins.shape[0]:
        raise ShapeError(f"scaler fitted on {params.mins.shape[0]} columns, got {X.shape[1]}")
    rng = params.ranges
    safe = np.where(rng > 0, rng, 1.0)
    return np.where(rng > 0, (X - params.mins) / safe, 0.0)


def scaler_inverse(params, Z):
    Z = _as_matrix(Z)
    if Z.shape[1] != params.mins.shape[0]:
        raise ShapeError(f"scaler fitted on {params.mins.shape[0]} columns, got {Z.shape[1]}")
    return params.mins + Z * params.ranges
