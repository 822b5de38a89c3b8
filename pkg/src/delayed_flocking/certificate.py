"""Sufficient flocking condition, proof constants and the admissible delay bound.

Given the initial data (d_X(0), d_V(0), R_v^tau), a horizon ``tau0`` and a
length ``alpha``, the flocking condition reads

    d_V(0) < alpha * psi_inf,   psi_inf = psi(d_X(0) + R_v^tau * tau0 + alpha).

When it holds, proof constants (beta_proof, c) are chosen so that the
strengthened closure ``(d_V(0) + 2 beta psi_inf / (1 - c)) / (c psi_inf) < alpha``
holds, and a delay bound ``tau_bar`` is found by bisection on the two
smallness functions. Every delay configuration with ``tau_max <= tau_bar``
then satisfies

    d_X(t) < d_X(0) + alpha,
    d_V(t) < C0 exp(-c psi_inf t),      C0 = d_V(0) + 2 beta psi_inf / (1 - c),
    Delta_N^tau(t) < beta psi_inf^2 exp(-c psi_inf t).
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

from .constants import BISECTION_RTOL, DEFAULT_TAU0_FACTOR, TAU_BAR_SHRINK
from .errors import DomainError, NotCertifiableError, PreconditionError
from .kernel import evaluate as kernel_evaluate
from .kernel import is_long_range
from .logger import get_logger
from .models.data_model import FlockingCertificate
from .models.scenario_config import KernelSpec

logger = get_logger(__name__)

DEFAULT_ALPHA_SPAN: tuple[float, float] = (1e-3, 1e3)
DEFAULT_ALPHA_POINTS = 121
# Largest alpha tried when pushing the grid upward for long-range kernels.
ALPHA_CEILING = 1e300


@dataclass(frozen=True)
class ConditionResult:
    satisfied: bool
    psi_inf: float
    margin: float


@dataclass(frozen=True)
class ProofConstants:
    """(beta_proof, c) together with the inputs they were chosen for."""

    alpha: float
    tau0: float
    psi_inf: float
    beta_proof: float
    c: float

    @property
    def rate(self) -> float:
        return self.c * self.psi_inf

    @property
    def delta_amplitude(self) -> float:
        return self.beta_proof * self.psi_inf**2

    def amplitude(self, d_V0: float) -> float:
        """C0 = d_V(0) + 2 beta psi_inf / (1 - c)."""
        return d_V0 + 2.0 * self.beta_proof * self.psi_inf / (1.0 - self.c)


def _require_positive(value: float, name: str) -> None:
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value}")


def _require_nonnegative(value: float, name: str) -> None:
    if not (math.isfinite(value) and value >= 0):
        raise DomainError(f"{name} must be nonnegative and finite, got {value}")


def check_condition(
    d_V0: float,
    d_X0: float,
    R_v_tau: float,
    tau0: float,
    alpha: float,
    kernel: KernelSpec,
) -> ConditionResult:
    """Evaluate d_V(0) < alpha * psi(d_X(0) + R_v^tau tau0 + alpha)."""
    _require_positive(alpha, "alpha")
    _require_positive(tau0, "tau0")
    _require_nonnegative(d_V0, "d_V0")
    _require_nonnegative(d_X0, "d_X0")
    _require_nonnegative(R_v_tau, "R_v_tau")
    psi_inf = float(kernel_evaluate(kernel, d_X0 + R_v_tau * tau0 + alpha))
    margin = alpha * psi_inf - d_V0
    return ConditionResult(satisfied=margin > 0.0, psi_inf=psi_inf, margin=margin)


def alpha_grid(
    d_X0: float,
    R_v_tau: float,
    tau0: float,
    span: tuple[float, float] = DEFAULT_ALPHA_SPAN,
    points: int = DEFAULT_ALPHA_POINTS,
) -> NDArray[np.float64]:
    """Logarithmic alpha grid s * geomspace(span) with s = max(1, d_X0 + R_v^tau tau0).

    The grid does not depend on d_V(0), so the chosen alpha does not move
    when only the velocity spread changes.
    """
    scale = max(1.0, d_X0 + R_v_tau * tau0)
    return scale * np.geomspace(span[0], span[1], points)


def _extend_upward(
    grid: NDArray[np.float64],
    margin: Callable[[float], float],
    span: tuple[float, float],
    points: int,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Shift the grid to larger alpha, one span at a time, until some margin is positive."""
    ratio = span[1] / span[0]
    margins = np.array([margin(a) for a in grid])
    while margins.max() <= 0.0 and grid[-1] < ALPHA_CEILING:
        grid = np.geomspace(grid[-1], min(grid[-1] * ratio, ALPHA_CEILING), points)
        margins = np.array([margin(a) for a in grid])
    return grid, margins


def search_alpha(
    d_V0: float,
    d_X0: float,
    R_v_tau: float,
    tau0: float,
    kernel: KernelSpec,
    span: tuple[float, float] = DEFAULT_ALPHA_SPAN,
    points: int = DEFAULT_ALPHA_POINTS,
) -> float | None:
    """Alpha maximizing the condition margin, or None when no grid point satisfies it.

    For long-range kernels alpha * psi(D + alpha) grows without bound, so a
    grid without a positive margin is pushed upward until one appears (up to
    ``ALPHA_CEILING``). The grid optimum is refined by a golden-section search
    in log(alpha) when it lies strictly inside the grid; alpha * psi(D + alpha)
    is unimodal in alpha.
    """
    _require_positive(tau0, "tau0")
    grid = alpha_grid(d_X0, R_v_tau, tau0, span, points)

    def margin(alpha: float) -> float:
        return check_condition(d_V0, d_X0, R_v_tau, tau0, alpha, kernel).margin

    if is_long_range(kernel):
        grid, margins = _extend_upward(grid, margin, span, points)
    else:
        margins = np.array([margin(a) for a in grid])
    best = int(np.argmax(margins))
    if margins[best] <= 0.0:
        logger.debug(f"No alpha on [{grid[0]:.3g}, {grid[-1]:.3g}] satisfies the condition")
        return None

    alpha = float(grid[best])
    if 0 < best < grid.size - 1:
        log_grid = np.log(grid)
        try:
            result = optimize.minimize_scalar(
                lambda u: -margin(float(np.exp(u))),
                bracket=(log_grid[best - 1], log_grid[best], log_grid[best + 1]),
                method="golden",
            )
        except ValueError:
            # Flat neighbourhood: the bracket is not strictly valid.
            result = None
        if result is not None and np.isfinite(result.x):
            refined = float(np.exp(result.x))
            if margin(refined) >= margins[best]:
                alpha = refined
    return alpha


def choose_proof_constants(
    d_V0: float, psi_inf: float, alpha: float, tau0: float | None = None
) -> ProofConstants:
    """c = (1 + d_V0 / (alpha psi_inf)) / 2 and beta = (1 - c)(c alpha - d_V0 / psi_inf) / 4."""
    _require_positive(alpha, "alpha")
    if not (0.0 < psi_inf <= 1.0):
        raise DomainError(f"psi_inf must lie in (0, 1], got {psi_inf}")
    _require_nonnegative(d_V0, "d_V0")
    if not d_V0 < alpha * psi_inf:
        raise PreconditionError(
            f"flocking condition fails: d_V0={d_V0} >= alpha*psi_inf={alpha * psi_inf}"
        )
    ratio = d_V0 / (alpha * psi_inf)
    c = 0.5 * (1.0 + ratio)
    beta_proof = (1.0 - c) * (c * alpha - d_V0 / psi_inf) / 4.0
    if not (0.0 < c < 1.0 and beta_proof > 0.0):
        # Margin below floating-point resolution.
        raise PreconditionError(
            f"condition margin too small to choose proof constants (c={c}, beta={beta_proof})"
        )
    return ProofConstants(
        alpha=alpha,
        tau0=float("inf") if tau0 is None else tau0,
        psi_inf=psi_inf,
        beta_proof=beta_proof,
        c=c,
    )


def _smallness_a(tau: float, constants: ProofConstants, R_v_tau: float) -> float:
    return constants.delta_amplitude - 2.0 * R_v_tau * tau * math.exp(constants.rate * tau)


def _smallness_b(tau: float, constants: ProofConstants, d_V0: float, n_agents: int) -> float:
    c_n1 = (n_agents - 1) / n_agents
    growth = math.expm1(constants.rate * tau) / constants.rate
    amplitude = c_n1 * constants.amplitude(d_V0) + constants.delta_amplitude
    return constants.delta_amplitude - amplitude * growth


def smallness_gaps(
    tau: float, constants: ProofConstants, d_V0: float, R_v_tau: float, n_agents: int
) -> tuple[float, float]:
    """Slack of both smallness inequalities at ``tau``; both are positive for tau < tau_bar."""
    return (
        _smallness_a(tau, constants, R_v_tau),
        _smallness_b(tau, constants, d_V0, n_agents),
    )


def _decreasing_root(func: Callable[[float], float], upper: float) -> float:
    """Root of a strictly decreasing ``func`` with func(0) > 0 on [0, upper]; ``upper`` if none."""
    if func(upper) >= 0.0:
        return upper
    return float(
        optimize.bisect(
            func,
            0.0,
            upper,
            xtol=np.finfo(float).tiny,
            rtol=BISECTION_RTOL,
            maxiter=500,
        )
    )


def smallness_roots(
    constants: ProofConstants, d_V0: float, R_v_tau: float, n_agents: int
) -> tuple[float, float]:
    """(tau_a, tau_b) capped at tau0; tau_a is +inf when R_v^tau = 0."""
    if n_agents < 2:
        raise DomainError(f"n_agents must be >= 2, got {n_agents}")
    upper = constants.tau0
    if not math.isfinite(upper):
        raise PreconditionError("proof constants carry no tau0")
    if R_v_tau == 0.0:
        tau_a = math.inf
    else:
        tau_a = _decreasing_root(lambda tau: _smallness_a(tau, constants, R_v_tau), upper)
    tau_b = _decreasing_root(lambda tau: _smallness_b(tau, constants, d_V0, n_agents), upper)
    return tau_a, tau_b


def compute_tau_bar(
    constants: ProofConstants, d_V0: float, R_v_tau: float, n_agents: int
) -> float:
    """tau_bar = (1 - 1e-6) * min(tau0, tau_a, tau_b)."""
    tau_a, tau_b = smallness_roots(constants, d_V0, R_v_tau, n_agents)
    return (1.0 - TAU_BAR_SHRINK) * min(constants.tau0, tau_a, tau_b)


def envelope(certificate: FlockingCertificate, t: float) -> tuple[float, float, float]:
    """(d_V bound, Delta bound, d_X bound) at time ``t >= 0``."""
    if not t >= 0.0:
        raise DomainError(f"envelope time must be nonnegative, got {t}")
    decay = math.exp(-certificate.rate * t)
    return (
        certificate.C0 * decay,
        certificate.delta_amplitude * decay,
        certificate.d_X_bound,
    )


def envelope_arrays(
    certificate: FlockingCertificate, t: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64], float]:
    """Vectorized :func:`envelope` over an array of nonnegative times."""
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise DomainError("envelope times must be nonnegative")
    decay = np.exp(-certificate.rate * times)
    return certificate.C0 * decay, certificate.delta_amplitude * decay, certificate.d_X_bound


def gronwall_envelope(certificate: FlockingCertificate, t: ArrayLike) -> float | NDArray[np.float64]:
    """d_V(0) e^{-psi t} + (2 beta psi / (1 - c)) (e^{-c psi t} - e^{-psi t}); never above C0 e^{-c psi t}."""
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise DomainError("envelope times must be nonnegative")
    psi = certificate.psi_inf
    fast = np.exp(-psi * times)
    slow = np.exp(-certificate.rate * times)
    bound = certificate.d_V0 * fast + (
        2.0 * certificate.beta_proof * psi / (1.0 - certificate.c)
    ) * (slow - fast)
    if bound.ndim == 0:
        return float(bound)
    return bound


def default_tau0(tau_max: float) -> float:
    """10 tau_max, or 1 for undelayed scenarios."""
    return DEFAULT_TAU0_FACTOR * tau_max if tau_max > 0 else 1.0


def build_certificate(
    d_V0: float,
    d_X0: float,
    R_v_tau: float,
    n_agents: int,
    kernel: KernelSpec,
    tau0: float,
    alpha: float | str = "auto",
    *,
    span: tuple[float, float] = DEFAULT_ALPHA_SPAN,
    points: int = DEFAULT_ALPHA_POINTS,
    R_v_source: str = "initial_history_max_speed",
) -> FlockingCertificate:
    """Run condition check, constant choice and tau_bar bisection end to end.

    Raises:
        NotCertifiableError: the condition fails for the given alpha or on the whole grid.
    """
    if alpha == "auto":
        found = search_alpha(d_V0, d_X0, R_v_tau, tau0, kernel, span=span, points=points)
        if found is None:
            raise NotCertifiableError(
                f"flocking condition fails on every alpha of the grid "
                f"(beta_kernel={kernel.beta_kernel}, d_V0={d_V0:.6g})"
            )
        alpha_value = found
    else:
        alpha_value = float(alpha)

    condition = check_condition(d_V0, d_X0, R_v_tau, tau0, alpha_value, kernel)
    if not condition.satisfied:
        raise NotCertifiableError(
            f"flocking condition fails at alpha={alpha_value:.6g}: "
            f"margin={condition.margin:.6g}"
        )
    try:
        constants = choose_proof_constants(d_V0, condition.psi_inf, alpha_value, tau0=tau0)
    except PreconditionError as exc:
        raise NotCertifiableError(str(exc))

    tau_a, tau_b = smallness_roots(constants, d_V0, R_v_tau, n_agents)
    tau_bar = (1.0 - TAU_BAR_SHRINK) * min(tau0, tau_a, tau_b)
    certificate = FlockingCertificate(
        alpha=alpha_value,
        tau0=tau0,
        R_v_tau=R_v_tau,
        psi_inf=condition.psi_inf,
        beta_proof=constants.beta_proof,
        c=constants.c,
        tau_bar=tau_bar,
        C0=constants.amplitude(d_V0),
        rate=constants.rate,
        d_X_bound=d_X0 + alpha_value,
        d_X0=d_X0,
        d_V0=d_V0,
        n_agents=n_agents,
        beta_kernel=kernel.beta_kernel,
        tau_a=tau_a if math.isfinite(tau_a) else None,
        tau_b=tau_b,
        R_v_source=R_v_source,
    )
    logger.debug(certificate.describe())
    return certificate
