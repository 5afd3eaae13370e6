"""Scaler -> polynomial expansion -> cross-validated LASSO-LARS pipeline."""
import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigurationError, ShapeError
from .cv import cross_validate_alpha
from .lars import lars_path
from .metrics import r2_score
from .poly import PolySpec, poly_expand
from .scaling import ScalerParams, scaler_apply, scaler_fit

FEATURES = ("batt_current", "dod", "batt_temp")
FORMAT_VERSION = 1


class ExtrapolationWarning(UserWarning):
    """Prediction inputs fall outside the scaler's training range."""


@dataclass(frozen=True)
class PipelineConfig:
    degree: int = 8
    folds: int = 6
    test_fraction: float = 0.2
    seed: int = 42
    split: str = "shuffle"
    mode: str = "lasso"

    def __post_init__(self):
        if self.split not in ("shuffle", "chronological"):
            raise ConfigurationError(f"split must be 'shuffle' or 'chronological', got {self.split!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigurationError("test_fraction must lie in (0, 1)")


def split_indices(n, config):
    """Sorted ``(train, test)`` row indices for the configured split."""
    n_test = int(round(n * config.test_fraction))
    if n_test < 1 or n - n_test < 1:
        raise ConfigurationError(f"{n} rows cannot be split with test fraction {config.test_fraction}")
    if config.split == "chronological":
        order = np.arange(n)
        return order[: n - n_test], order[n - n_test:]
    perm = np.random.default_rng(config.seed).permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


@dataclass(frozen=True, eq=False)
class RegressionModel:
    scaler: ScalerParams
    poly: PolySpec
    coefficients: np.ndarray
    intercept: float
    alpha_selected: float
    cv_scores: tuple
    train_r2: float
    test_r2: float
    config: PipelineConfig
    n_samples: int
    cv_alpha_normalized: float = float("nan")

    @property
    def active_count(self):
        return int(np.count_nonzero(self.coefficients))

    def transform(self, X):
        """Scaled, expanded design matrix for raw feature rows."""
        return poly_expand(self.poly, scaler_apply(self.scaler, X))

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "features": list(FEATURES),
            "scaler": self.scaler.to_dict(),
            "n_features": self.poly.n_features,
            "degree": self.poly.degree,
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "alpha_selected": self.alpha_selected,
            "cv_alpha_normalized": self.cv_alpha_normalized,
            "cv_scores": list(self.cv_scores),
            "train_r2": self.train_r2,
            "test_r2": self.test_r2,
            "n_samples": self.n_samples,
            "config": asdict(self.config),
        }

    @classmethod
    def from_dict(cls, d):
        poly = PolySpec(d["n_features"], d["degree"])
        coefs = np.array(d["coefficients"], dtype=np.float64)
        if coefs.shape != (len(poly),):
            raise ShapeError(f"{coefs.size} coefficients for {len(poly)} monomials")
        return cls(scaler=ScalerParams.from_dict(d["scaler"]), poly=poly, coefficients=coefs,
                   intercept=float(d["intercept"]), alpha_selected=float(d["alpha_selected"]),
                   cv_scores=tuple(d["cv_scores"]), train_r2=float(d["train_r2"]),
                   test_r2=float(d["test_r2"]), config=PipelineConfig(**d["config"]),
                   n_samples=int(d["n_samples"]),
                   cv_alpha_normalized=float(d.get("cv_alpha_normalized", "nan")))

    def to_json(self):
        # json writes floats with repr, which round-trips every double exactly
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def fit_pipeline(features, targets, config=PipelineConfig()):
    """Fit the voltage regression on ``(I, DOD, T)`` rows.

    The rows are split into train/test parts, the scaler is fitted on the
    training part only, the regularisation level is chosen by k-fold search
    on the training part, and the final coefficients come from the LASSO path
    of the whole training part at that level.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or y.ndim != 1:
        raise ShapeError(f"features {X.shape} and targets {y.shape} do not align")
    if X.shape[0] == 0:
        raise ShapeError("empty dataset")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ShapeError("features and targets must be finite")
    train, test = split_indices(X.shape[0], config)
    scaler = scaler_fit(X[train])
    spec = PolySpec(X.shape[1], config.degree)
    P_train = poly_expand(spec, scaler_apply(scaler, X[train]))
    # the bias monomial is carried by the intercept, not the penalised path
    D_train = P_train[:, 1:]
    cv = cross_validate_alpha(D_train, y[train], folds=config.folds, seed=config.seed, mode=config.mode)
    alpha = cv.alpha_selected
    path = lars_path(D_train, y[train], mode=config.mode)
    coefs = np.concatenate([[0.0], path.coef_at(alpha)])
    intercept = path.intercept_at(alpha)

    model = RegressionModel(scaler=scaler, poly=spec, coefficients=coefs, intercept=intercept,
                            alpha_selected=alpha, cv_scores=tuple(float(v) for v in cv.fold_scores),
                            train_r2=float("nan"), test_r2=float("nan"), config=config,
                            n_samples=int(X.shape[0]),
                            cv_alpha_normalized=float(cv.grid[cv.best_index]))
    train_r2 = r2_score(y[train], _predict_rows(model, X[train]))
    test_r2 = r2_score(y[test], _predict_rows(model, X[test])) if test.size >= 2 else float("nan")
    return RegressionModel(**{**model.__dict__, "train_r2": train_r2, "test_r2": test_r2})


def _predict_rows(model, X):
    return model.transform(X) @ model.coefficients + model.intercept


def predict(model, i, dod, t):
    """Predicted voltage; warns with :class:`ExtrapolationWarning` outside the training box."""
    i, dod, t = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (i, dod, t)))
    shape = i.shape
    X = np.column_stack([i.ravel(), dod.ravel(), t.ravel()])
    Z = scaler_apply(model.scaler, X)
    if np.any((Z < 0.0) | (Z > 1.0)):
        warnings.warn("prediction inputs outside the training range", ExtrapolationWarning, stacklevel=2)
    u = poly_expand(model.poly, Z) @ model.coefficients + model.intercept
    return float(u[0]) if shape == () else u.reshape(shape)


def dataset_from_segments(segments):
    """Stack ``(I, DOD, T)`` features and voltage targets from segments."""
    if not segments:
        return np.empty((0, 3)), np.empty(0)
    X = np.column_stack([
        np.concatenate([s.currents for s in segments]),
        np.concatenate([s.dod for s in segments]),
        np.concatenate([s.temperatures for s in segments]),
    ])
    return X, np.concatenate([s.voltages for s in segments])
