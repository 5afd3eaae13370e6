"""Equivalent-circuit discharge voltage model and its identification.

The terminal voltage during discharge is modelled as

    U = U0 - K(T) * DOD - R(T) * I - Up(T) * exp(-DOD / DODkp(T))

with every temperature-dependent coefficient affine in the battery
temperature, ``c(T) = a + b * T``.  For a fixed ``DODkp`` pair the model is
linear in the remaining seven coefficients, so fitting alternates an exact
linear least-squares solve with a derivative-free search over ``DODkp``.
"""
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sl
from scipy.optimize import minimize

from .errors import DegenerateDataError, DomainError, InsufficientDataError

UNITS = {
    "u0": "V",
    "k_dod": "V/(mA*h), a + b*T with T in degC",
    "r": "V/mA, a + b*T",
    "u_p": "V, a + b*T",
    "dod_kp": "mA*h, a + b*T",
}

AFFINE_NAMES = ("u0", "k_dod.a", "k_dod.b", "r.a", "r.b", "u_p.a", "u_p.b")
CONSTANT_NAMES = ("u0", "k_dod.a", "r.a", "u_p.a")


def _affine(pair, t):
    return pair[0] + pair[1] * t


@dataclass(frozen=True)
class EcmParams:
    u0: float
    k_dod: tuple = (0.0, 0.0)
    r: tuple = (0.0, 0.0)
    u_p: tuple = (0.0, 0.0)
    dod_kp: tuple = (1.0, 0.0)

    def __post_init__(self):
        for name in ("k_dod", "r", "u_p", "dod_kp"):
            pair = tuple(float(v) for v in getattr(self, name))
            if len(pair) != 2:
                raise ValueError(f"{name} must be an (a, b) pair")
            object.__setattr__(self, name, pair)
        object.__setattr__(self, "u0", float(self.u0))

    def k_dod_at(self, t):
        return _affine(self.k_dod, t)

    def r_at(self, t):
        return _affine(self.r, t)

    def u_p_at(self, t):
        return _affine(self.u_p, t)

    def dod_kp_at(self, t):
        return _affine(self.dod_kp, t)

    def violations(self, t_lo, t_hi):
        """Names of coefficients breaking their sign constraint on ``[t_lo, t_hi]``."""
        ends = np.array([t_lo, t_hi], dtype=float)
        bad = []
        if np.any(self.k_dod_at(ends) <= 0):
            bad.append("k_dod")
        if np.any(self.r_at(ends) <= 0):
            bad.append("r")
        if np.any(self.u_p_at(ends) < 0):
            bad.append("u_p")
        if np.any(self.dod_kp_at(ends) <= 0):
            bad.append("dod_kp")
        return bad

    def to_dict(self):
        return {"u0": self.u0, "k_dod": list(self.k_dod), "r": list(self.r),
                "u_p": list(self.u_p), "dod_kp": list(self.dod_kp), "units": dict(UNITS)}

    @classmethod
    def from_dict(cls, d):
        return cls(u0=d["u0"], k_dod=tuple(d["k_dod"]), r=tuple(d["r"]),
                   u_p=tuple(d["u_p"]), dod_kp=tuple(d["dod_kp"]))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def predict_voltage(params, i, dod, t):
    """Terminal voltage (V) for current ``i`` (mA), depth of discharge ``dod``
    (mA*h) and battery temperature ``t`` (degC).  Inputs broadcast."""
    i, dod, t = (np.asarray(v, dtype=np.float64) for v in (i, dod, t))
    kp = params.dod_kp_at(t)
    if np.any(kp <= 0):
        raise DomainError(f"DOD_kp(T) must be positive; got {np.min(kp)} mA*h")
    u = (params.u0 - params.k_dod_at(t) * dod - params.r_at(t) * i
         - params.u_p_at(t) * np.exp(-dod / kp))
    return float(u) if u.ndim == 0 else u


def residuals(params, segments):
    """Measured minus predicted voltage, concatenated in segment order."""
    if not segments:
        return np.empty(0)
    return np.concatenate([
        seg.voltages - predict_voltage(params, seg.currents, seg.dod, seg.temperatures)
        for seg in segments
    ])


@dataclass(frozen=True)
class EcmFitOptions:
    affine_temperature: bool = True
    min_temperature_span: float = 1.0
    grid: tuple = (2.0, 5.0, 10.0, 20.0, 40.0)
    max_iter: int = 500
    xatol: float = 1e-9
    fatol: float = 1e-16
    enforce_constraints: bool = True
    min_samples: int = 50


@dataclass(frozen=True, eq=False)
class FitReport:
    params: EcmParams
    rmse: float
    residuals: np.ndarray
    curves_used: list
    iterations: int
    converged: bool = True
    temperature_mode: str = "affine"
    constraints_satisfied: bool = True
    temperature_range: tuple = (0.0, 0.0)
    grid_objective: dict = field(default_factory=dict)

    def summary(self):
        return {"params": self.params.to_dict(), "rmse": self.rmse,
                "n_samples": int(self.residuals.size), "curves_used": list(self.curves_used),
                "iterations": self.iterations, "converged": self.converged,
                "temperature_mode": self.temperature_mode,
                "constraints_satisfied": self.constraints_satisfied,
                "temperature_range": list(self.temperature_range),
                "grid_objective": {repr(k): v for k, v in self.grid_objective.items()}}


class _Problem:
    """Pooled data plus the separable least-squares machinery."""

    def __init__(self, v, i, d, t, affine):
        self.v, self.i, self.d, self.t = v, i, d, t
        self.affine = affine
        self.t_lo, self.t_hi = float(t.min()), float(t.max())
        self.t_mid = 0.5 * (self.t_lo + self.t_hi)
        self.tc = t - self.t_mid
        self.names = AFFINE_NAMES if affine else CONSTANT_NAMES
        self.scale_v = float(np.var(v)) or 1.0

    def kp_pair(self, z):
        mid, slope = (z[0], z[1]) if self.affine else (z[0], 0.0)
        return (mid - slope * self.t_mid, slope)

    def design(self, kp):
        e = np.exp(-self.d / kp)
        one = np.ones_like(self.v)
        if self.affine:
            cols = [one, -self.d, -self.tc * self.d, -self.i, -self.tc * self.i, -e, -self.tc * e]
        else:
            cols = [one, -self.d, -self.i, -e]
        return np.column_stack(cols)

    def solve(self, z):
        """Linear coefficients for outer point ``z``; ``None`` when rank deficient."""
        kp_pair = self.kp_pair(z)
        kp = kp_pair[0] + kp_pair[1] * self.t
        if np.any(kp <= 0):
            return None, kp_pair, ()
        A = self.design(kp)
        norms = np.linalg.norm(A, axis=0)
        norms[norms == 0] = 1.0
        Q, R, perm = sl.qr(A / norms, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > 1e-10 * diag[0]))
        if rank < A.shape[1]:
            return None, kp_pair, tuple(self.names[k] for k in perm[rank:])
        sol = np.empty(A.shape[1])
        sol[perm] = sl.solve_triangular(R, Q.T @ self.v)
        return sol / norms, kp_pair, ()

    def params(self, coef, kp_pair):
        tm = self.t_mid
        if self.affine:
            u0, ka, kb, ra, rb, pa, pb = coef
        else:
            (u0, ka, ra, pa), kb, rb, pb = coef, 0.0, 0.0, 0.0
        # coefficients were solved against centred temperature
        return EcmParams(u0=u0, k_dod=(ka - kb * tm, kb), r=(ra - rb * tm, rb),
                         u_p=(pa - pb * tm, pb), dod_kp=kp_pair)

    def mse(self, params):
        pred = predict_voltage(params, self.i, self.d, self.t)
        return float(np.mean((self.v - pred) ** 2))

    def objective(self, z, constrained):
        coef, kp_pair, _ = self.solve(z)
        if coef is None:
            return np.inf
        p = self.params(coef, kp_pair)
        if constrained and p.violations(self.t_lo, self.t_hi):
            return np.inf
        return self.mse(p) / self.scale_v


def _pool(segments):
    v = np.concatenate([s.voltages for s in segments])
    i = np.concatenate([s.currents for s in segments])
    d = np.concatenate([s.dod for s in segments])
    t = np.concatenate([s.temperatures for s in segments])
    return v, i, d, t


def fit_ecm(segments, options=EcmFitOptions()):
    """Identify equivalent-circuit parameters from discharge segments.

    Candidate ``DODkp`` values from ``options.grid`` (held constant over
    temperature) seed a Nelder-Mead search over ``(DODkp at mid
    temperature, DODkp slope)``; each evaluation solves the remaining
    coefficients by pivoted QR.  Outer points whose solution breaks a sign
    constraint over the observed temperature range are rejected.

    Raises
    ------
    InsufficientDataError
        Fewer than ``options.min_samples`` pooled samples.
    DegenerateDataError
        The linear design is rank deficient at every grid candidate.
    """
    n = sum(len(s) for s in segments)
    if n < options.min_samples:
        raise InsufficientDataError(f"ECM fit needs at least {options.min_samples} samples, got {n}")
    v, i, d, t = _pool(segments)
    span = float(t.max() - t.min())
    affine = options.affine_temperature and span > options.min_temperature_span
    prob = _Problem(v, i, d, t, affine)

    starts = [np.array([g, 0.0]) if affine else np.array([g]) for g in options.grid]
    grid_obj, collinear = {}, None
    for g, z in zip(options.grid, starts):
        coef, _, dep = prob.solve(z)
        if coef is None and dep:
            collinear = dep
        grid_obj[float(g)] = prob.objective(z, constrained=False)
    if all(not np.isfinite(f) for f in grid_obj.values()):
        names = ", ".join(collinear or ())
        raise DegenerateDataError(f"linear subproblem rank deficient; collinear regressors: {names}",
                                  collinear or ())

    constrained = options.enforce_constraints
    cand = [prob.objective(z, constrained) for z in starts]
    if constrained and not any(np.isfinite(c) for c in cand):
        constrained = False
        cand = [grid_obj[float(g)] for g in options.grid]
    best = int(np.argmin(cand))
    z0 = starts[best]

    simplex = [z0]
    steps = [0.25 * z0[0]] + ([0.25 * z0[0] / max(span, 1.0)] if affine else [])
    for k, step in enumerate(steps):
        corner = z0.copy()
        corner[k] += step
        simplex.append(corner)
    res = minimize(prob.objective, z0, args=(constrained,), method="Nelder-Mead",
                   options={"maxiter": options.max_iter, "xatol": options.xatol,
                            "fatol": options.fatol, "initial_simplex": np.array(simplex)})
    z = res.x if res.fun <= cand[best] else z0
    coef, kp_pair, _ = prob.solve(z)
    params = prob.params(coef, kp_pair)
    resid = v - predict_voltage(params, i, d, t)
    curves = []
    for s in segments:
        if s.source_date not in curves:
            curves.append(s.source_date)
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    grid_mse = {g: f * prob.scale_v for g, f in grid_obj.items()}
    return FitReport(params=params, rmse=rmse, residuals=resid, curves_used=curves,
                     iterations=int(res.nit), converged=bool(res.success),
                     temperature_mode="affine" if affine else "constant",
                     constraints_satisfied=not params.violations(prob.t_lo, prob.t_hi),
                     temperature_range=(prob.t_lo, prob.t_hi), grid_objective=grid_mse)
