"""Flock functionals, diagnostics series, invariant checks and decay fits."""

from .checks import (
    check_acceleration_bound,
    check_certificate_envelope,
    check_delta_integral_bound,
    check_delta_small_time,
    check_dissipative_inequalities,
    check_velocity_bound,
)
from .fit import fit_decay_rate, fit_log_linear
from .functionals import (
    delta_N_tau,
    diameters,
    max_acceleration,
    mean_velocity_drift,
    psi_floor,
)
from .series import DiagnosticsRecord, DiagnosticsSeries, SeriesMetadata

__all__ = [
    "check_acceleration_bound",
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "SeriesMetadata",
    "check_certificate_envelope",
    "check_delta_integral_bound",
    "check_delta_small_time",
    "check_dissipative_inequalities",
    "check_velocity_bound",
    "delta_N_tau",
    "diameters",
    "fit_decay_rate",
    "fit_log_linear",
    "max_acceleration",
    "mean_velocity_drift",
    "psi_floor",
]
