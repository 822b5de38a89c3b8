"""Power-law communication weight psi(r) = (1 + r^2)^(-beta/2).

``log(1 + r^2)`` is evaluated as ``logaddexp(0, 2 log r)``, which stays finite
for every finite ``r`` (no overflow in ``r**2``). For ``beta_kernel > 0`` the
weight still underflows to 0.0 once ``r**(-beta)`` drops below the smallest
subnormal double, i.e. roughly ``r > 10**(324 / beta)``; below ``r = 1e150``
the relative error is a few ulps.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError
from .models.scenario_config import KernelSpec

__all__ = ["KernelSpec", "evaluate", "is_long_range", "lipschitz_witness"]


# Distances below this give log(1 + r^2) == 0.0 exactly.
_TINY = np.finfo(float).tiny


def _log1p_square(r: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.logaddexp(0.0, 2.0 * np.log(np.maximum(r, _TINY)))


def evaluate(kernel: KernelSpec, r: ArrayLike) -> float | NDArray[np.float64]:
    """Return psi(r) for a scalar or array of nonnegative distances."""
    distances = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(distances)):
        raise DomainError("kernel distance must be finite")
    if np.any(distances < 0):
        raise DomainError("kernel distance must be nonnegative")

    beta = kernel.beta_kernel
    if beta == 0.0:
        weights = np.ones_like(distances)
    else:
        weights = np.exp(-0.5 * beta * _log1p_square(distances))
    if weights.ndim == 0:
        return float(weights)
    return weights


def is_long_range(kernel: KernelSpec) -> bool:
    """True in the regime beta < 1 where the flocking condition is always satisfiable."""
    return kernel.beta_kernel < 1.0


def lipschitz_witness(kernel: KernelSpec) -> float:
    """Upper bound beta/2 on |psi'(r)|; used only as a test-time witness."""
    return 0.5 * kernel.beta_kernel
