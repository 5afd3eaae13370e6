"""Pure-Python implementations of the numerical kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them operation for
operation so both backends produce the same floating point results.
"""
import math

import numpy as np


def cumulative_dod(t, i):
    """Trapezoidal running integral of current ``i`` (mA) over ``t`` (s), in mA*h."""
    t = np.ascontiguousarray(t, dtype=np.float64)
    i = np.ascontiguousarray(i, dtype=np.float64)
    out = np.zeros(t.shape[0], dtype=np.float64)
    if t.shape[0] > 1:
        # np.cumsum is sequential for 1-D input, matching the compiled loop
        out[1:] = np.cumsum(0.5 * (i[1:] + i[:-1]) * (t[1:] - t[:-1])) / 3600.0
    return out


def poly_columns(X, parents, features):
    """Build monomial columns incrementally.

    Column 0 is all ones; column ``j > 0`` is ``out[:, parents[j]] * X[:, features[j]]``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    m = len(parents)
    out = np.empty((n, m), dtype=np.float64)
    out[:, 0] = 1.0
    for j in range(1, m):
        out[:, j] = out[:, parents[j]] * X[:, features[j]]
    return out


def _gap(beta, q, c, yy, alpha):
    bq = math.fsum(b * qq for b, qq in zip(beta, q))
    bc = math.fsum(b * cc for b, cc in zip(beta, c))
    rr = yy - 2.0 * bq + (bq - bc)
    yr = yy - bq
    cmax = max(abs(v) for v in c)
    if alpha == 0.0:
        return cmax
    l1 = math.fsum(abs(b) for b in beta)
    primal = 0.5 * rr + alpha * l1
    s = 1.0 if cmax <= alpha else alpha / cmax
    dual = s * yr - 0.5 * s * s * rr
    return primal - dual


def lasso_cd_gram(G, q, yy, alpha, beta0, max_iter, tol, xtol):
    """Cyclic coordinate descent for ``0.5*||y - X b||^2 + alpha*||b||_1``.

    Works on the Gram form: ``G = X'X``, ``q = X'y``, ``yy = y'y``.  Stops when
    the largest coordinate move of a sweep is ``<= xtol`` and the duality gap
    is ``<= tol`` (for ``alpha == 0`` the gradient sup-norm replaces the gap).

    Returns ``(beta, sweeps, gap)``.
    """
    G = np.asarray(G, dtype=np.float64)
    p = G.shape[0]
    Gl = G.tolist()
    ql = [float(v) for v in q]
    beta = [float(v) for v in beta0]
    c = list(ql)
    for j in range(p):
        bj = beta[j]
        if bj != 0.0:
            row = Gl[j]
            for k in range(p):
                c[k] -= row[k] * bj
    gap = math.inf
    sweep = 0
    while sweep < max_iter:
        sweep += 1
        max_step = 0.0
        for j in range(p):
            gjj = Gl[j][j]
            if gjj <= 0.0:
                continue
            bj = beta[j]
            z = c[j] + gjj * bj
            if z > alpha:
                new = (z - alpha) / gjj
            elif z < -alpha:
                new = (z + alpha) / gjj
            else:
                new = 0.0
            delta = new - bj
            if delta != 0.0:
                row = Gl[j]
                for k in range(p):
                    c[k] -= row[k] * delta
                beta[j] = new
                if abs(delta) > max_step:
                    max_step = abs(delta)
        if max_step <= xtol:
            gap = _gap(beta, ql, c, yy, alpha)
            if gap <= tol or max_step == 0.0:
                break
    return np.array(beta, dtype=np.float64), sweep, gap
