"""CubeSat storage-battery discharge modelling from EPS telemetry."""

__version__ = "0.1.0"
