"""Numerical verification of the velocity bound, delay-mismatch bounds and
dissipative differential inequalities over a completed diagnostics series.

Every check returns a :class:`CheckReport`. Margins are ``bound - value``
without tolerance; a record is a violation when its margin is below
``-tolerance`` and is *flagged* when the margin is negative but within the
tolerance, since such records cannot be told apart from discretization error.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import cumulative_trapezoid

from ..certificate import envelope_arrays
from ..constants import (
    DISSIPATIVE_ABS_TOL,
    DISSIPATIVE_C_DT,
    ENVELOPE_RTOL,
    VELOCITY_BOUND_TOL,
)
from ..errors import InsufficientDataError, UsageError
from ..kernel import evaluate as kernel_evaluate
from ..models.data_model import CheckReport, FlockingCertificate
from ..models.scenario_config import KernelSpec
from .series import DiagnosticsSeries

# Relative slack for comparing record spacings and window edges.
_SPACING_RTOL = 1e-9


def _margin_report(
    name: str,
    times: NDArray[np.float64],
    margins: NDArray[np.float64],
    tolerance: float,
    threshold: float | None = None,
    indices: NDArray[np.intp] | None = None,
    **details: object,
) -> CheckReport:
    if indices is None:
        indices = np.arange(margins.size)
    if margins.size == 0:
        return CheckReport(name=name, passed=True, threshold=threshold, tolerance=tolerance, details=dict(details))
    worst = int(np.argmin(margins))
    violations = int(np.count_nonzero(margins < -tolerance))
    flagged = int(np.count_nonzero((margins < 0.0) & (margins >= -tolerance)))
    return CheckReport(
        name=name,
        passed=violations == 0,
        n_records=int(margins.size),
        n_violations=violations,
        threshold=threshold,
        tolerance=tolerance,
        worst_margin=float(margins[worst]),
        worst_time=float(times[worst]),
        worst_index=int(indices[worst]),
        flagged=flagged,
        details=dict(details),
    )


def uniform_spacing(series: DiagnosticsSeries, expected: float | None = None) -> float:
    """Common spacing of the record times; raises UsageError when it is not uniform.

    The final gap may be shorter than the others: a run whose step count is
    not a multiple of the output stride still records its last step.
    """
    t = series.times
    if t.size < 2:
        raise InsufficientDataError("at least two records are needed for difference quotients")
    gaps = np.diff(t)
    body, last = gaps[:-1], float(gaps[-1])
    if expected is not None:
        h = float(expected)
    else:
        h = float(body.mean()) if body.size else last
    slack = _SPACING_RTOL * max(h, float(t[-1]))
    body_off = float(np.max(np.abs(body - h))) if body.size else 0.0
    if h <= 0 or body_off > slack or not 0.0 < last <= h + slack:
        raise UsageError(
            f"records are not uniformly spaced at h={h:.6g} "
            f"(gaps range {gaps.min():.6g}..{gaps.max():.6g})"
        )
    return h


def check_velocity_bound(
    series: DiagnosticsSeries, R_v_tau: float, tol: float = VELOCITY_BOUND_TOL
) -> CheckReport:
    """R_v(t) <= R_v^tau + tol at every record; also d_V <= 2 R_v^tau + tol."""
    t = series.times
    margins = R_v_tau - series.column("R_v")
    report = _margin_report("velocity_bound", t, margins, tol, threshold=R_v_tau)
    d_v_margin = 2.0 * R_v_tau - series.column("d_V")
    if d_v_margin.size:
        report.details["d_V_worst_margin"] = float(d_v_margin.min())
        report.details["d_V_violations"] = int(np.count_nonzero(d_v_margin < -tol))
        if report.details["d_V_violations"]:
            report.passed = False
    return report


def check_delta_small_time(
    series: DiagnosticsSeries, R_v_tau: float, tau: float, tol: float = VELOCITY_BOUND_TOL
) -> CheckReport:
    """sup of Delta_N^tau over records in [0, tau] is at most 2 R_v^tau tau + tol."""
    t = series.times
    window = np.flatnonzero((t >= 0.0) & (t <= tau * (1.0 + _SPACING_RTOL) + _SPACING_RTOL))
    if window.size == 0:
        raise InsufficientDataError(f"no diagnostics records in [0, {tau}]")
    threshold = 2.0 * R_v_tau * tau
    margins = threshold - series.column("delta_N_tau")[window]
    return _margin_report(
        "delta_small_time", t[window], margins, tol, threshold=threshold, indices=window
    )


def check_dissipative_inequalities(
    series: DiagnosticsSeries,
    tau: float,
    dt: float,
    tol: float | None = None,
    *,
    kernel: KernelSpec | None = None,
    R_v_tau: float | None = None,
) -> CheckReport:
    """Forward-difference form of the diameter inequalities.

    D+d_X <= d_V and D+d_V <= -psi(d_X + R_v^tau tau) d_V + 2 Delta_N^tau,
    evaluated at every record but the last. ``dt`` is the record spacing and
    the default tolerance is ``DISSIPATIVE_C_DT * dt + DISSIPATIVE_ABS_TOL``.
    With ``kernel`` and ``R_v_tau`` the psi floor is recomputed instead of read
    from the series.
    """
    h = uniform_spacing(series, expected=dt)
    tolerance = DISSIPATIVE_C_DT * h + DISSIPATIVE_ABS_TOL if tol is None else tol
    t = series.times
    d_x = series.column("d_X")
    d_v = series.column("d_V")
    delta = series.column("delta_N_tau")
    if kernel is not None and R_v_tau is not None:
        floor = np.asarray(kernel_evaluate(kernel, d_x + R_v_tau * tau), dtype=float)
    else:
        floor = series.column("psi_floor")

    gaps = np.diff(t)
    dx_quotient = np.diff(d_x) / gaps
    dv_quotient = np.diff(d_v) / gaps
    dx_margins = d_v[:-1] - dx_quotient
    dv_margins = (-floor[:-1] * d_v[:-1] + 2.0 * delta[:-1]) - dv_quotient
    margins = np.minimum(dx_margins, dv_margins)

    return _margin_report(
        "dissipative_inequalities",
        t[:-1],
        margins,
        tolerance,
        spacing=h,
        d_X_worst_margin=float(dx_margins.min()),
        d_V_worst_margin=float(dv_margins.min()),
        d_X_violations=int(np.count_nonzero(dx_margins < -tolerance)),
        d_V_violations=int(np.count_nonzero(dv_margins < -tolerance)),
    )


def _window_integral(
    t: NDArray[np.float64], values: NDArray[np.float64], lower: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Trapezoid integral of the piecewise-linear interpolant over [lower_k, t_k]."""
    cumulative = cumulative_trapezoid(values, t, initial=0.0)
    k = np.clip(np.searchsorted(t, lower, side="right") - 1, 0, t.size - 1)
    f_lower = np.interp(lower, t, values)
    at_lower = cumulative[k] + 0.5 * (lower - t[k]) * (values[k] + f_lower)
    return cumulative - at_lower


def check_delta_integral_bound(
    series: DiagnosticsSeries, tau: float, n_agents: int, tol: float | None = None
) -> CheckReport:
    """Delta(t) <= C_{N,1} int_{t-tau}^t d_V + int_{t-tau}^t Delta + tol for t >= tau."""
    t = series.times
    if t.size < 2:
        raise InsufficientDataError("at least two records are needed for window integrals")
    h = float(np.max(np.diff(t)))
    if tau > 0 and h > tau * (1.0 + _SPACING_RTOL):
        raise UsageError(f"record spacing {h:.6g} exceeds the delay window tau={tau:.6g}")
    tolerance = DISSIPATIVE_C_DT * h + DISSIPATIVE_ABS_TOL if tol is None else tol
    c_n1 = (n_agents - 1) / n_agents
    d_v = series.column("d_V")
    delta = series.column("delta_N_tau")
    window = np.flatnonzero(t >= tau * (1.0 - _SPACING_RTOL) + t[0])
    if window.size == 0:
        raise InsufficientDataError(f"no diagnostics records at t >= {tau}")
    lower = np.maximum(t - tau, t[0])
    bound = c_n1 * _window_integral(t, d_v, lower) + _window_integral(t, delta, lower)
    margins = (bound - delta)[window]
    return _margin_report(
        "delta_integral_bound", t[window], margins, tolerance, indices=window, C_N1=c_n1
    )


def check_certificate_envelope(
    series: DiagnosticsSeries,
    certificate: FlockingCertificate,
    tau_max: float,
    rtol: float = ENVELOPE_RTOL,
) -> CheckReport:
    """d_X, d_V and Delta stay below the certified envelopes at every record.

    The report is ``applicable`` only when ``tau_max <= tau_bar``; beyond the
    certified delay range violations are reported but say nothing about the
    theory.
    """
    t = series.times
    if np.any(t < 0):
        raise UsageError("envelope check needs nonnegative record times")
    dv_bound, delta_bound, dx_bound = envelope_arrays(certificate, t)
    ratios = {
        "d_V": (dv_bound, series.column("d_V")),
        "delta_N_tau": (delta_bound, series.column("delta_N_tau")),
        "d_X": (np.full(t.size, dx_bound), series.column("d_X")),
    }
    # Relative margins: bound * (1 + rtol) - value, normalized by the bound.
    margins = np.full(t.size, np.inf)
    details: dict[str, object] = {}
    for name, (bound, value) in ratios.items():
        scale = np.maximum(bound, np.finfo(float).tiny)
        relative = (bound - value) / scale
        details[f"{name}_worst_margin"] = float(relative.min()) if relative.size else None
        details[f"{name}_violations"] = int(np.count_nonzero(relative < -rtol))
        margins = np.minimum(margins, relative)
    report = _margin_report(
        "certificate_envelope",
        t,
        margins,
        rtol,
        threshold=certificate.tau_bar,
        tau_max=tau_max,
        **details,
    )
    report.applicable = tau_max <= certificate.tau_bar
    return report


def check_acceleration_bound(
    max_acceleration: float, R_v_tau: float, tol: float = VELOCITY_BOUND_TOL
) -> CheckReport:
    """Every stored |a_i| is at most 2 R_v^tau + tol."""
    threshold = 2.0 * R_v_tau
    margin = threshold - max_acceleration
    return CheckReport(
        name="acceleration_bound",
        passed=margin >= -tol,
        n_records=1,
        n_violations=int(margin < -tol),
        threshold=threshold,
        tolerance=tol,
        worst_margin=margin,
        flagged=int(-tol <= margin < 0.0),
        details={"max_acceleration": max_acceleration},
    )
