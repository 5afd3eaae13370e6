# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""
import math

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def cumulative_dod(t, i):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] iv = np.ascontiguousarray(i, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0], k
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double acc = 0.0
    if n == 0:
        return out
    ov[0] = 0.0
    for k in range(1, n):
        acc += 0.5 * (iv[k] + iv[k - 1]) * (tv[k] - tv[k - 1])
        ov[k] = acc / 3600.0
    return out


def poly_columns(X, parents, features):
    cdef const double[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const Py_ssize_t[::1] par = np.ascontiguousarray(parents, dtype=np.intp)
    cdef const Py_ssize_t[::1] feat = np.ascontiguousarray(features, dtype=np.intp)
    cdef Py_ssize_t n = xv.shape[0], m = par.shape[0], r, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] ov = out
    for r in range(n):
        ov[r, 0] = 1.0
        for j in range(1, m):
            ov[r, j] = ov[r, par[j]] * xv[r, feat[j]]
    return out


def lasso_cd_gram(G, q, double yy, double alpha, beta0, Py_ssize_t max_iter,
                  double tol, double xtol):
    cdef const double[:, ::1] g = np.ascontiguousarray(G, dtype=np.float64)
    cdef Py_ssize_t p = g.shape[0], j, k, sweep = 0
    qa = np.array(q, dtype=np.float64)
    beta = np.array(beta0, dtype=np.float64)
    c = qa.copy()
    cdef double[::1] qv = qa
    cdef double[::1] b = beta
    cdef double[::1] cv = c
    cdef double gjj, bj, z, new, delta, max_step
    for j in range(p):
        bj = b[j]
        if bj != 0.0:
            for k in range(p):
                cv[k] -= g[j, k] * bj
    gap = math.inf
    while sweep < max_iter:
        sweep += 1
        max_step = 0.0
        for j in range(p):
            gjj = g[j, j]
            if gjj <= 0.0:
                continue
            bj = b[j]
            z = cv[j] + gjj * bj
            if z > alpha:
                new = (z - alpha) / gjj
            elif z < -alpha:
                new = (z + alpha) / gjj
            else:
                new = 0.0
            delta = new - bj
            if delta != 0.0:
                for k in range(p):
                    cv[k] -= g[j, k] * delta
                b[j] = new
                if fabs(delta) > max_step:
                    max_step = fabs(delta)
        if max_step <= xtol:
            gap = _gap(beta, qa, c, yy, alpha)
            if gap <= tol or max_step == 0.0:
                break
    return beta, sweep, gap


cdef double _gap(beta, q, c, double yy, double alpha):
    bq = math.fsum(beta * q)
    bc = math.fsum(beta * c)
    cdef double rr = yy - 2.0 * bq + (bq - bc)
    cdef double yr = yy - bq
    cdef double cmax = np.max(np.abs(c))
    if alpha == 0.0:
        return cmax
    cdef double l1 = math.fsum(np.abs(beta))
    cdef double primal = 0.5 * rr + alpha * l1
    cdef double s = 1.0 if cmax <= alpha else alpha / cmax
    cdef double dual = s * yr - 0.5 * s * s * rr
    return primal - dual
