"""Exponential decay-rate estimation by a log-linear least-squares fit."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike
from scipy import stats

from ..constants import FIT_MIN_DV, FIT_START_DELAYS
from ..errors import InsufficientDataError
from ..models.data_model import DecayFit
from .series import DiagnosticsSeries


def fit_log_linear(t: ArrayLike, values: ArrayLike, t_start: float = 0.0) -> DecayFit:
    """Fit values ~ C exp(-rate t) on t >= t_start, skipping values below ``FIT_MIN_DV``."""
    t_arr = np.asarray(t, dtype=float)
    y_arr = np.asarray(values, dtype=float)
    usable = (t_arr >= t_start) & np.isfinite(y_arr) & (y_arr >= FIT_MIN_DV)
    if np.count_nonzero(usable) < 3:
        raise InsufficientDataError(
            f"decay fit needs >= 3 records with d_V >= {FIT_MIN_DV} on t >= {t_start}, "
            f"got {np.count_nonzero(usable)}"
        )
    t_fit = t_arr[usable]
    log_y = np.log(y_arr[usable])
    result = stats.linregress(t_fit, log_y)
    residuals = log_y - (result.intercept + result.slope * t_fit)
    return DecayFit(
        amplitude=float(np.exp(result.intercept)),
        rate=float(-result.slope),
        rms_residual=float(np.sqrt(np.mean(residuals**2))),
        n_points=int(t_fit.size),
        t_start=float(t_fit[0]),
        t_end=float(t_fit[-1]),
    )


def default_fit_start(series: DiagnosticsSeries) -> float:
    """Skip the initial transient: 5 tau_max (0 without delay metadata)."""
    tau = series.metadata.tau_max or 0.0
    return FIT_START_DELAYS * tau


def fit_decay_rate(series: DiagnosticsSeries, t_start: float | None = None) -> DecayFit:
    """Fit d_V(t) ~ C exp(-rate t) on [t_start, t_end] of the series."""
    start = default_fit_start(series) if t_start is None else t_start
    return fit_log_linear(series.times, series.column("d_V"), t_start=start)
