"""Synthetic discharge telemetry drawn from the equivalent-circuit model."""
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .ecm import EcmParams, predict_voltage
from .energy import integrate_dod
from .errors import ConfigurationError
from .telemetry import N_PANELS, DischargeSegment, TelemetrySample

DEFAULT_PARAMS = EcmParams(
    u0=4.25,
    k_dod=(8.0e-4, 2.0e-5),
    r=(3.0e-4, -5.0e-6),
    u_p=(0.05, 2.0e-3),
    dod_kp=(8.0, 0.3),
)

DEFAULT_PROFILE = ((300.0, 600.0), (150.0, 300.0), (450.0, 300.0), (250.0, 600.0))


@dataclass(frozen=True)
class SynthSpec:
    true_params: EcmParams = DEFAULT_PARAMS
    current_profile: tuple = DEFAULT_PROFILE
    temperature: tuple = (6.0, 6.0)
    noise_sigma: float = 0.0
    quantization: float = 0.0
    sample_interval: float = 10.0
    seed: int = 42
    start_time: float = 0.0
    source_date: str = ""

    def __post_init__(self):
        if not self.current_profile or any(d <= 0 for _, d in self.current_profile):
            raise ConfigurationError("current profile needs positive durations")
        if self.noise_sigma < 0 or self.quantization < 0:
            raise ConfigurationError("noise sigma and quantization must be non-negative")
        if self.sample_interval <= 0:
            raise ConfigurationError("sample interval must be positive")
        temp = self.temperature
        if np.ndim(temp) == 0:
            temp = (float(temp), float(temp))
        object.__setattr__(self, "temperature", tuple(float(v) for v in temp))


def gen_discharge(spec):
    """Sample one discharge curve; the final sample sits at the profile end."""
    levels = np.array([lvl for lvl, _ in spec.current_profile], dtype=float)
    bounds = np.cumsum([dur for _, dur in spec.current_profile])
    total = float(bounds[-1])
    n = int(np.floor(total / spec.sample_interval + 1e-9)) + 1
    tau = np.arange(n) * spec.sample_interval
    current = levels[np.minimum(np.searchsorted(bounds, tau, side="right"), len(levels) - 1)]
    t0, t1 = spec.temperature
    temp = t0 + (t1 - t0) * tau / total
    dod = integrate_dod(tau, current)
    volts = np.asarray(predict_voltage(spec.true_params, current, dod, temp), dtype=float)
    if spec.noise_sigma > 0:
        volts = volts + np.random.default_rng(spec.seed).normal(0.0, spec.noise_sigma, n)
    if spec.quantization > 0:
        volts = np.round(volts / spec.quantization) * spec.quantization
    zeros = (0.0,) * N_PANELS
    samples = tuple(
        TelemetrySample(timestamp=float(spec.start_time + tau[k]), panel_voltage=zeros,
                        panel_current=zeros, panel_temp=(float(temp[k]),) * N_PANELS,
                        batt_voltage=float(volts[k]), batt_current=float(current[k]),
                        batt_temp=float(temp[k]), source_date=spec.source_date)
        for k in range(n)
    )
    return DischargeSegment(samples, dod, spec.source_date)


def gen_curve_set(n_curves=10, params=DEFAULT_PARAMS, t_range=(1.0, 15.0), noise_sigma=0.0,
                  quantization=0.0, seed=42, sample_interval=10.0, first_date=date(2021, 3, 1)):
    """Curves at evenly spaced constant temperatures, each with a rotated current profile.

    Curve ``k`` uses seed ``seed + k`` and date tag ``first_date + k days``.
    """
    temps = np.linspace(t_range[0], t_range[1], n_curves)
    prof = list(DEFAULT_PROFILE)
    out = []
    for k in range(n_curves):
        rot = tuple(prof[k % len(prof):] + prof[:k % len(prof)])
        spec = SynthSpec(true_params=params, current_profile=rot, temperature=float(temps[k]),
                         noise_sigma=noise_sigma, quantization=quantization,
                         sample_interval=sample_interval, seed=seed + k,
                         start_time=86400.0 * k,
                         source_date=(first_date + timedelta(days=k)).isoformat())
        out.append(gen_discharge(spec))
    return out
