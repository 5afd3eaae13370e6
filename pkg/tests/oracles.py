"""Independent reference solvers used by the tests."""
import math

import numpy as np


def soft(z, a):
    return np.sign(z) * np.maximum(np.abs(z) - a, 0.0)


def lasso_cd(X, y, alpha, tol=1e-10, max_sweeps=200_000):
    """min 0.5 ||y - X b||^2 + alpha ||b||_1 by cyclic coordinate descent.

    Stops when the duality gap, relative to ``0.5 ||y||^2``, is below ``tol``
    and a full sweep moved no coefficient by more than 1e-14 relative.
    """
    n, p = X.shape
    b = np.zeros(p)
    r = y.copy()
    col2 = np.einsum("ij,ij->j", X, X)
    scale = max(0.5 * float(y @ y), 1e-300)
    for _ in range(max_sweeps):
        step = 0.0
        for j in range(p):
            old = b[j]
            rho = X[:, j] @ r + col2[j] * old
            b[j] = soft(rho, alpha) / col2[j]
            if b[j] != old:
                r -= X[:, j] * (b[j] - old)
                step = max(step, abs(b[j] - old))
        c = X.T @ r
        cmax = np.abs(c).max()
        theta = r * (min(1.0, alpha / cmax) if cmax > 0 else 1.0)
        primal = 0.5 * math.fsum(r * r) + alpha * math.fsum(np.abs(b))
        dual = 0.5 * math.fsum(y * y) - 0.5 * math.fsum((y - theta) ** 2)
        if primal - dual <= tol * scale and step <= 1e-14 * max(1.0, np.abs(b).max()):
            return b
    raise RuntimeError("coordinate descent did not converge")


def poly_derivative(spec, coefs, z, k):
    """Analytic d/dz_k of sum_j coefs[j] * prod z**e_j at one point."""
    total = 0.0
    for c, e in zip(coefs, spec.exponents):
        if e[k] == 0:
            continue
        term = c * e[k] * z[k] ** (e[k] - 1)
        for m, em in enumerate(e):
            if m != k:
                term *= z[m] ** em
        total += term
    return total
