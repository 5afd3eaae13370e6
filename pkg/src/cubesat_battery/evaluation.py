"""Model errors in units of the voltage quantisation step, and sweeps."""
import json
from dataclasses import dataclass, field

import numpy as np

from .ecm import predict_voltage
from .errors import ShapeError, UnidentifiableError, ValidationError
from .regpath.pipeline import predict as ml_predict

THRESHOLDS = (0.5, 1.0, 2.0)
# slack for errors that land on a threshold up to floating point noise
_EDGE = 1e-9


def infer_lsb(values, min_fraction=0.99, rtol=1e-9):
    """Quantisation step of a series that lives on a lattice.

    The step is the smallest gap between sorted distinct values; it must
    divide at least ``min_fraction`` of all consecutive gaps.  The result is
    rounded to 10 significant digits to strip representation noise
    (``3.81 - 3.80`` is not exactly ``0.01`` in binary).
    """
    v = np.unique(np.asarray(values, dtype=np.float64))
    if v.size < 2:
        raise UnidentifiableError("need at least two distinct values to infer an LSB step")
    gaps = np.diff(v)
    step = float(gaps.min())
    ratio = gaps / step
    ok = np.abs(ratio - np.round(ratio)) <= rtol * np.maximum(ratio, 1.0)
    if ok.mean() < min_fraction:
        bad = gaps[~ok][:5]
        raise ValidationError(
            f"values are not on a lattice of step {step:.6g}: {np.count_nonzero(~ok)} of "
            f"{gaps.size} gaps are not multiples (e.g. {', '.join(f'{g:.6g}' for g in bad)}); "
            "set the LSB explicitly")
    return float(f"{step:.10g}")


@dataclass(frozen=True, eq=False)
class LsbErrorReport:
    lsb_step: float
    errors: np.ndarray
    max_abs_error: float
    histogram_edges: np.ndarray
    histogram_counts: np.ndarray
    coverage: dict
    exact_zero: float
    exceed_2lsb_fraction: float
    label: str = ""

    def to_dict(self):
        return {
            "label": self.label,
            "lsb_step": self.lsb_step,
            "n": int(self.errors.size),
            "max_abs_error_lsb": self.max_abs_error,
            "exact_zero_fraction": self.exact_zero,
            "coverage": {repr(k): v for k, v in self.coverage.items()},
            "exceed_2lsb_fraction": self.exceed_2lsb_fraction,
            "histogram": {"edges_lsb": self.histogram_edges.tolist(),
                          "counts": self.histogram_counts.tolist()},
        }

    def histogram_csv(self):
        lines = ["bin_low_lsb,bin_high_lsb,count"]
        e = self.histogram_edges
        for lo, hi, c in zip(e[:-1], e[1:], self.histogram_counts):
            lines.append(f"{lo!r},{hi!r},{int(c)}")
        return "\n".join(lines) + "\n"


def lsb_errors(actual, predicted, lsb, label="", thresholds=THRESHOLDS, predicted_decimals=None):
    """Signed errors ``(actual - predicted) / lsb`` with coverage statistics.

    ``exact_zero`` counts samples where the prediction, rounded to the LSB
    lattice, equals the measurement.  The histogram uses 0.5 LSB bins
    centred on multiples of 0.5.  ``predicted_decimals`` optionally rounds
    predictions before comparison.
    """
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape or a.ndim != 1:
        raise ShapeError(f"actual {a.shape} and predicted {p.shape} must be equal-length 1-D series")
    if not lsb > 0:
        raise ValidationError(f"LSB step must be positive, got {lsb}")
    if a.size == 0:
        raise ShapeError("no samples to evaluate")
    if predicted_decimals is not None:
        p = np.round(p, predicted_decimals)
    err = (a - p) / lsb
    mag = np.abs(err)
    max_abs = float(mag.max())
    coverage = {float(t): float(np.mean(mag <= t + _EDGE)) for t in sorted(thresholds)}
    exact = float(np.mean(np.abs(a - np.round(p / lsb) * lsb) < 0.5 * lsb))
    k = max(int(np.ceil((max_abs - 0.25) / 0.5 - _EDGE)), 0)
    edges = 0.5 * np.arange(-k, k + 2) - 0.25
    counts, _ = np.histogram(err, bins=edges)
    return LsbErrorReport(lsb_step=float(lsb), errors=err, max_abs_error=max_abs,
                          histogram_edges=edges, histogram_counts=counts, coverage=coverage,
                          exact_zero=exact, exceed_2lsb_fraction=float(np.mean(mag > 2.0 + _EDGE)),
                          label=label)


@dataclass(frozen=True, eq=False)
class SweepResult:
    temperature: float
    dod_levels: np.ndarray
    currents: np.ndarray
    values: np.ndarray
    kind: str = "voltage"

    def to_csv(self):
        head = ["dod_mah"] + [repr(float(c)) for c in self.currents]
        lines = [",".join(head)]
        for d, row in zip(self.dod_levels, self.values):
            lines.append(",".join([repr(float(d))] + [repr(float(v)) for v in row]))
        return "\n".join(lines) + "\n"


def _grid(dods, currents):
    d = np.asarray(dods, dtype=np.float64)
    c = np.asarray(currents, dtype=np.float64)
    for name, g in (("DOD levels", d), ("current grid", c)):
        if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
            raise ValidationError(f"{name} must be a non-empty strictly increasing sequence")
    return d, c


def voltage_sweep(predictor, t, dods, currents):
    """``predictor(i, dod, t)`` on the (DOD level x current) grid at temperature ``t``."""
    d, c = _grid(dods, currents)
    I, D = np.meshgrid(c, d)
    vals = np.asarray(predictor(I, D, np.full_like(I, t)), dtype=np.float64).reshape(I.shape)
    return SweepResult(float(t), d, c, vals, "voltage")


def sensitivity_sweep(predictor, t, dods, currents, delta_i=1.0):
    """Forward difference ``(f(I + dI) - f(I)) / dI`` on the sweep grid."""
    if not delta_i > 0:
        raise ValidationError(f"delta_i must be positive, got {delta_i}")
    d, c = _grid(dods, currents)
    I, D = np.meshgrid(c, d)
    T = np.full_like(I, t)
    hi = np.asarray(predictor(I + delta_i, D, T), dtype=np.float64).reshape(I.shape)
    lo = np.asarray(predictor(I, D, T), dtype=np.float64).reshape(I.shape)
    return SweepResult(float(t), d, c, (hi - lo) / delta_i, "dU/dI")


def ecm_predictor(params):
    return lambda i, dod, t: predict_voltage(params, i, dod, t)


def ml_predictor(model):
    return lambda i, dod, t: ml_predict(model, i, dod, t)


@dataclass(frozen=True)
class ComparisonReport:
    lsb_step: float
    rows: list = field(default_factory=list)

    def to_dict(self):
        return {"lsb_step": self.lsb_step, "rows": self.rows}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def row(self, metric):
        return next(r for r in self.rows if r["metric"] == metric)


def _winner(ecm, ml, higher_is_better):
    if ecm == ml:
        return "tie"
    return "ml" if (ml > ecm) == higher_is_better else "ecm"


def compare_models(ecm_report, ml_report):
    """Side-by-side coverage table; ``delta`` is ML minus ECM."""
    if not np.isclose(ecm_report.lsb_step, ml_report.lsb_step, rtol=1e-12, atol=0.0):
        raise ValidationError(
            f"reports use different LSB steps ({ecm_report.lsb_step} vs {ml_report.lsb_step})")
    metrics = [("exact_zero", ecm_report.exact_zero, ml_report.exact_zero, True)]
    for t in sorted(set(ecm_report.coverage) | set(ml_report.coverage)):
        metrics.append((f"coverage_le_{t:g}lsb", ecm_report.coverage.get(t, float("nan")),
                        ml_report.coverage.get(t, float("nan")), True))
    metrics.append(("exceed_2lsb", ecm_report.exceed_2lsb_fraction, ml_report.exceed_2lsb_fraction, False))
    metrics.append(("max_abs_error_lsb", ecm_report.max_abs_error, ml_report.max_abs_error, False))
    rows = [{"metric": name, "ecm": e, "ml": m, "delta": m - e, "winner": _winner(e, m, hib)}
            for name, e, m, hib in metrics]
    return ComparisonReport(float(ecm_report.lsb_step), rows)
