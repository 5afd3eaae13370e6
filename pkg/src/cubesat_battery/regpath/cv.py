"""K-fold selection of the LASSO regularisation level."""
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from .lars import lars_path


def kfold_blocks(n, folds, seed):
    """Validation index blocks: a seeded permutation cut into contiguous pieces."""
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(b) for b in np.array_split(perm, folds)]


@dataclass(frozen=True, eq=False)
class CVResult:
    """Held-out error curves on a common alpha grid.

    ``grid`` holds scale-free levels ``alpha / sqrt(n_train)`` so folds with
    different training sizes share one axis; :attr:`alpha_selected` is
    expressed for a path fitted on all ``n_samples`` rows.
    """
    grid: np.ndarray
    fold_mse: np.ndarray
    fold_r2: np.ndarray
    best_index: int
    n_samples: int

    @property
    def mean_mse(self):
        return self.fold_mse.mean(axis=0)

    @property
    def alpha_selected(self):
        return float(self.grid[self.best_index] * np.sqrt(self.n_samples))

    @property
    def fold_scores(self):
        """Per-fold held-out R^2 at the selected level."""
        return self.fold_r2[:, self.best_index]


def cross_validate_alpha(X, y, folds=6, seed=42, mode="lasso"):
    """Pick ``alpha`` minimising the mean held-out squared error.

    Every fold's path is evaluated at the union of all folds' knots
    (coefficients are piecewise linear in alpha between knots).  Exact ties in
    the mean error go to the larger alpha.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if folds < 2:
        raise ConfigurationError(f"need at least 2 folds, got {folds}")
    if n < 2 * folds:
        raise ConfigurationError(f"{n} rows cannot fill {folds} folds of at least 2 rows")
    blocks = kfold_blocks(n, folds, seed)
    fits = []
    for val in blocks:
        train = np.setdiff1d(np.arange(n), val, assume_unique=True)
        fits.append((train, val, lars_path(X[train], y[train], mode=mode)))
    grid = np.unique(np.concatenate([p.alphas / np.sqrt(tr.size) for tr, _, p in fits]))[::-1]

    mse = np.empty((folds, grid.size))
    r2 = np.full((folds, grid.size), np.nan)
    for f, (train, val, path) in enumerate(fits):
        coefs = path.coefs_at(grid * np.sqrt(train.size))
        intercepts = path.y_mean - coefs @ path.x_mean
        pred = X[val] @ coefs.T + intercepts
        err = y[val][:, None] - pred
        mse[f] = np.mean(err ** 2, axis=0)
        if val.size >= 2 and np.ptp(y[val]) > 0:
            ss_tot = np.sum((y[val] - y[val].mean()) ** 2)
            r2[f] = 1.0 - np.sum(err ** 2, axis=0) / ss_tot
    mean = mse.mean(axis=0)
    best = int(np.flatnonzero(mean == mean.min())[0])
    return CVResult(grid=grid, fold_mse=mse, fold_r2=r2, best_index=best, n_samples=n)

