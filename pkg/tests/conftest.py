import numpy as np
import pytest

from cubesat_battery.telemetry import N_PANELS, TelemetrySample

_ACCEPTANCE = []


@pytest.fixture
def record():
    """Log one acceptance line; collected lines are echoed after the run."""
    def _record(criterion, ok, detail):
        tag = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"[{tag}] criterion {criterion}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        if ok is None:
            pytest.skip(detail)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


def make_sample(t, current, voltage=4.0, temp=10.0, panel_v=0.0, panel_i=0.0, date=""):
    pv = panel_v if isinstance(panel_v, tuple) else (float(panel_v),) * N_PANELS
    pi = panel_i if isinstance(panel_i, tuple) else (float(panel_i),) * N_PANELS
    return TelemetrySample(timestamp=float(t), panel_voltage=pv, panel_current=pi,
                           panel_temp=(float(temp),) * N_PANELS, batt_voltage=float(voltage),
                           batt_current=float(current), batt_temp=float(temp), source_date=date)


def series(currents, dt=10.0, t0=0.0, date="", **kw):
    return [make_sample(t0 + k * dt, c, date=date, **kw) for k, c in enumerate(currents)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
