"""Energy balance of the EPS and depth-of-discharge integration.

Power bookkeeping follows the bus balance

    load = battery_output + eta * sum_i(panel_voltage_i * panel_current_i)

with battery output ``V_batt * I_batt`` (positive while discharging).  Panel
channels are in mV and mA, so their products are microwatts and are scaled to
milliwatts; the battery channel is V * mA = mW.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, UnidentifiableError, ValidationError
from .kernels import cumulative_dod

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def integrate_dod(timestamps, currents):
    """Depth of discharge (mA*h) as the trapezoidal running integral of current.

    Parameters
    ----------
    timestamps : array_like, shape (n,)
        Seconds, strictly increasing.
    currents : array_like, shape (n,)
        Discharge current in mA.

    Returns
    -------
    ndarray, shape (n,)
        ``dod[0] == 0``.
    """
    t = np.asarray(timestamps, dtype=np.float64)
    i = np.asarray(currents, dtype=np.float64)
    if t.ndim != 1 or t.shape != i.shape:
        raise ValidationError(f"timestamps {t.shape} and currents {i.shape} must be equal-length 1-D series")
    if t.shape[0] < 2:
        raise InsufficientDataError("DOD integration needs at least 2 samples")
    steps = np.diff(t)
    if np.any(steps <= 0):
        k = int(np.argmax(steps <= 0)) + 1
        raise ValidationError(f"timestamps not strictly increasing at index {k}")
    return cumulative_dod(t, i)


@dataclass(frozen=True)
class EnergyBalance:
    load_power: np.ndarray
    battery_power: np.ndarray
    panel_power_total: np.ndarray
    eta: float

    def to_csv(self, timestamps=None, delimiter=","):
        cols = ["load_power_mw", "battery_power_mw", "panel_power_mw"]
        data = [self.load_power, self.battery_power, self.panel_power_total]
        if timestamps is not None:
            cols.insert(0, "timestamp")
            data.insert(0, np.asarray(timestamps, dtype=float))
        lines = [delimiter.join(cols)]
        for row in zip(*data):
            lines.append(delimiter.join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def _channels(samples):
    pv = np.array([s.panel_voltage for s in samples], dtype=np.float64).reshape(len(samples), -1)
    pi = np.array([s.panel_current for s in samples], dtype=np.float64).reshape(len(samples), -1)
    vb = np.array([s.batt_voltage for s in samples], dtype=np.float64)
    ib = np.array([s.batt_current for s in samples], dtype=np.float64)
    return pv, pi, vb, ib


def _powers(samples):
    pv, pi, vb, ib = _channels(samples)
    # negative panel readings are sensor offsets, not generation
    panel = np.clip(pv * pi, 0.0, None).sum(axis=1) / 1000.0
    return vb * ib, panel


def compute_balance(samples, eta):
    if not 0.0 < eta <= 1.0:
        raise ValidationError(f"eta must lie in (0, 1], got {eta}")
    battery, panel = _powers(samples)
    return EnergyBalance(load_power=battery + eta * panel, battery_power=battery,
                         panel_power_total=panel, eta=float(eta))


def load_variance(battery_power, panel_power, eta):
    """Sample variance of the load series implied by efficiency ``eta``."""
    return float(np.var(battery_power + eta * panel_power, ddof=1))


def golden_section(f, lo, hi, tol):
    """Minimise a unimodal ``f`` on ``[lo, hi]`` until the bracket is narrower than ``tol``."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a >= tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def estimate_efficiency(samples, lo=0.5, hi=1.0, tol=1e-4, min_sunlit_fraction=0.1):
    """Identify the panel-to-bus transfer efficiency by minimum load variance.

    The load computed from the balance is assumed nearly constant, so the
    efficiency that makes it least variable is taken as the estimate.

    Returns
    -------
    eta : float
    objective : float
        Load variance (mW^2) at ``eta``.
    """
    if len(samples) < 2:
        raise InsufficientDataError("efficiency estimation needs at least 2 samples")
    battery, panel = _powers(samples)
    sunlit = float(np.mean(panel > 0.0))
    if sunlit < min_sunlit_fraction or np.var(panel) == 0.0:
        raise UnidentifiableError(
            f"only {sunlit:.1%} of samples have panel power; need {min_sunlit_fraction:.0%} "
            "for the load variance to depend on eta")
    eta = golden_section(lambda e: load_variance(battery, panel, e), lo, hi, tol)
    return eta, load_variance(battery, panel, eta)
