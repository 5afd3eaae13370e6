"""Least-angle regression with the LASSO modification.

Predictors are centred and scaled to unit Euclidean norm and the response is
centred before the path is traced, so the regularisation level ``alpha`` is
the common absolute correlation ``|x_j' r|`` of the active predictors in
those standardised coordinates.  In lasso mode each knot solves

    min_b  0.5 * ||y_c - X_s b||^2 + alpha * ||b||_1 .

Coefficients are reported in the units of the original columns.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sl

from ..errors import ShapeError


@dataclass(frozen=True, eq=False)
class LarsPath:
    """Knots of a piecewise-linear coefficient path.

    Attributes
    ----------
    alphas : ndarray, shape (k,)
        Strictly decreasing; the last entry is 0 when the path completed.
    coefs : ndarray, shape (k, p)
        Coefficients at each knot, original column units.
    active : tuple of tuple of int
        Active set on the stretch of path that starts at each knot.
    x_mean, x_scale : ndarray, shape (p,)
        Column means and centred norms (0 for excluded columns).
    y_mean : float
    excluded : tuple of int
        Zero-variance columns left out of the fit.
    collinear : tuple of (alpha, int)
        Candidates skipped because they were linearly dependent on the active set.
    drops : tuple of (alpha, int)
        Lasso sign-change removals.
    """
    alphas: np.ndarray
    coefs: np.ndarray
    active: tuple
    mode: str
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    excluded: tuple = ()
    collinear: tuple = ()
    drops: tuple = ()
    completed: bool = True

    @property
    def std_coefs(self):
        """Coefficients in the standardised coordinates the path was traced in."""
        return self.coefs * self.x_scale

    def coefs_at(self, alphas):
        """Linear interpolation of the coefficients at each requested alpha."""
        q = np.atleast_1d(np.asarray(alphas, dtype=np.float64))
        a = self.alphas
        k = np.searchsorted(-a, -q, side="right") - 1
        out = np.empty((q.size, self.coefs.shape[1]))
        above = k < 0
        below = k >= a.size - 1
        out[above] = self.coefs[0]
        out[below] = self.coefs[-1]
        mid = ~(above | below)
        if np.any(mid):
            km = k[mid]
            w = (a[km] - q[mid]) / (a[km] - a[km + 1])
            out[mid] = self.coefs[km] + w[:, None] * (self.coefs[km + 1] - self.coefs[km])
        return out

    def coef_at(self, alpha):
        return self.coefs_at([alpha])[0]

    def intercept_at(self, alpha):
        return float(self.y_mean - self.x_mean @ self.coef_at(alpha))


def standardize(X, y):
    """Centre ``X`` and ``y`` and scale the columns of ``X`` to unit norm.

    Returns ``(Xs, yc, x_mean, norms, y_mean, keep)``; ``keep`` flags the
    columns with non-negligible variance (only those appear in ``Xs``).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x_mean = X.mean(axis=0)
    Xc = X - x_mean
    norms = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
    magnitude = np.sqrt(X.shape[0]) * np.maximum(np.abs(X).max(axis=0, initial=0.0), 1e-300)
    keep = norms > 1e-12 * magnitude
    y_mean = float(y.mean())
    return Xc[:, keep] / norms[keep], y - y_mean, x_mean, np.where(keep, norms, 0.0), y_mean, keep


def _trace(G, Xy, lasso, max_active, max_steps, collinear_tol):
    """LARS on Gram-form data; returns knots in standardised coordinates."""
    m = Xy.shape[0]
    beta = np.zeros(m)
    c = Xy.copy()
    C = float(np.max(np.abs(c))) if m else 0.0
    knots = []
    collinear, drops = [], []
    if m == 0 or C == 0.0 or max_active == 0:
        knots.append((0.0, beta.copy(), ()))
        return knots, collinear, drops, True

    active = []
    signs = np.zeros(m)
    L = np.zeros((0, 0))
    dead = np.zeros(m, dtype=bool)

    def add(j):
        nonlocal L
        g = G[active, j]
        if active:
            w = sl.solve_triangular(L, g, lower=True)
            d2 = G[j, j] - w @ w
        else:
            w, d2 = np.zeros(0), G[j, j]
        if d2 <= collinear_tol * G[j, j]:
            dead[j] = True
            collinear.append((C, j))
            return
        k = len(active)
        L2 = np.zeros((k + 1, k + 1))
        L2[:k, :k] = L
        L2[k, :k] = w
        L2[k, k] = np.sqrt(d2)
        L = L2
        active.append(j)
        signs[j] = np.sign(c[j])

    for j in np.flatnonzero(np.abs(c) >= C * (1.0 - 1e-12)):
        if len(active) < max_active:
            add(int(j))
    knots.append((C, beta.copy(), tuple(active)))

    blocked = -1
    steps = 0
    while C > 0.0:
        if steps >= max_steps or not active:
            return knots, collinear, drops, False
        steps += 1
        A = np.array(active)
        d = sl.cho_solve((L, True), signs[A])
        a = G[:, A] @ d

        gamma, joiners = C, []
        if len(active) < max_active:
            free = np.ones(m, dtype=bool)
            free[A] = False
            free &= ~dead
            idx = np.flatnonzero(free)
            cands = np.full((2, idx.size), np.inf)
            for row, (num, den) in enumerate(((C - c[idx], 1.0 - a[idx]),
                                              (C + c[idx], 1.0 + a[idx]))):
                ok = den > 1e-12
                with np.errstate(divide="ignore", invalid="ignore"):
                    g = np.where(ok, num / np.where(ok, den, 1.0), np.inf)
                g[g <= 1e-14 * C] = np.inf
                # a just-dropped variable sits on the boundary; only its
                # opposite-sign crossing is a real event
                g[(idx == blocked) & (num <= 1e-9 * C)] = np.inf
                cands[row] = g
            gj = cands.min(axis=0) if idx.size else np.zeros(0)
            if gj.size and gj.min() < gamma:
                gamma = float(gj.min())
                joiners = [int(j) for j in idx[gj <= gamma * (1.0 + 1e-10)]]

        drop = -1
        if lasso:
            with np.errstate(divide="ignore", invalid="ignore"):
                gd = np.where(d != 0.0, -beta[A] / d, np.inf)
            gd[gd <= 1e-14 * C] = np.inf
            k = int(np.argmin(gd))
            if gd[k] < gamma:
                gamma, drop, joiners = float(gd[k]), int(A[k]), []

        beta[A] += gamma * d
        C = 0.0 if (gamma >= C and drop < 0 and not joiners) else C - gamma
        blocked = -1
        if drop >= 0:
            beta[drop] = 0.0
            drops.append((C, drop))
            active.remove(drop)
            signs[drop] = 0.0
            L = np.linalg.cholesky(G[np.ix_(active, active)]) if active else np.zeros((0, 0))
            blocked = drop
        c = Xy - G @ beta
        for j in sorted(joiners):
            if len(active) < max_active:
                add(j)
        knots.append((C, beta.copy(), tuple(active)))
    return knots, collinear, drops, True


def lars_path(X, y, mode="lasso", max_steps=None, collinear_tol=1e-12):
    """Trace the full LARS (``mode="lar"``) or LASSO (``mode="lasso"``) path.

    The path runs from ``alpha = max_j |x_j' y_c|`` (all coefficients zero)
    down to ``alpha = 0``, where the active-set coefficients are the ordinary
    least-squares solution.  Candidates that enter simultaneously are added in
    column order; one that is linearly dependent on the active set is skipped
    and listed in ``collinear``.  Zero-variance columns are excluded with a
    ``RuntimeWarning``.

    Parameters
    ----------
    X : array_like, shape (n, p)
    y : array_like, shape (n,)
    mode : {"lasso", "lar"}
    max_steps : int, optional
        Cap on path steps; default ``50 * p + 10``.
    collinear_tol : float
        Squared sine of the angle to the active span below which a
        candidate counts as dependent.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ShapeError(f"X must be 2-D with at least one column, got {X.shape}")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"y must have length {X.shape[0]}, got shape {y.shape}")
    if mode not in ("lasso", "lar"):
        raise ValueError(f"mode must be 'lasso' or 'lar', got {mode!r}")
    n, p = X.shape
    Xs, yc, x_mean, norms, y_mean, keep = standardize(X, y)
    excluded = tuple(int(j) for j in np.flatnonzero(~keep))
    if excluded:
        warnings.warn(f"zero-variance columns excluded from the path: {list(excluded)}",
                      RuntimeWarning, stacklevel=2)
    cols = np.flatnonzero(keep)
    G = Xs.T @ Xs
    Xy = Xs.T @ yc
    max_steps = 50 * p + 10 if max_steps is None else max_steps
    knots, collinear, drops, completed = _trace(
        G, Xy, mode == "lasso", min(cols.size, n - 1), max_steps, collinear_tol)
    if not completed:
        warnings.warn("LARS path stopped before reaching alpha = 0", RuntimeWarning, stacklevel=2)

    alphas = np.array([k[0] for k in knots])
    coefs = np.zeros((len(knots), p))
    for r, (_, b, _) in enumerate(knots):
        coefs[r, cols] = b / norms[cols]
    return LarsPath(
        alphas=alphas, coefs=coefs,
        active=tuple(tuple(int(cols[j]) for j in act) for _, _, act in knots),
        mode=mode, x_mean=x_mean, x_scale=norms, y_mean=y_mean, excluded=excluded,
        collinear=tuple((float(a), int(cols[j])) for a, j in collinear),
        drops=tuple((float(a), int(cols[j])) for a, j in drops),
        completed=completed)
