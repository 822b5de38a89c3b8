"""Right-hand side of the delayed Cucker-Smale system and speed functionals.

Interactions are evaluated per ordered pair (i, j), i != j: first the pairs
with a positive lag, whose neighbour values come from the history, then the
zero-lag pairs of reference mode, which read the current state.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from ..errors import DomainError, NumericBlowUpError
from ..kernel import evaluate as kernel_evaluate
from ..models.scenario_config import KernelSpec
from .delays import DelayMatrix
from .history import HistoryBuffer, InitialHistory
from .state import SystemState


def delayed_neighbours(
    t: float, history: HistoryBuffer, delays: DelayMatrix
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """x_j and v_j at t - tau_ji for every entry of ``delays.delayed_pairs``."""
    receivers, sources = delays.delayed_pairs
    if receivers.size == 0:
        empty = np.empty((0, history.dimension))
        return empty, empty
    return history.lookup_many(sources, t - delays.lags)


def pair_accelerations(
    t: float,
    positions: NDArray[np.float64],
    velocities: NDArray[np.float64],
    delayed_x: NDArray[np.float64],
    delayed_v: NDArray[np.float64],
    delays: DelayMatrix,
    kernel: KernelSpec,
) -> NDArray[np.float64]:
    """Accelerations at time ``t`` from the values returned by :func:`delayed_neighbours`."""
    receivers = delays.interaction_receivers
    instant = delays.instant_pairs[1]
    if instant.size:
        delayed_x = np.concatenate([delayed_x, positions[instant]])
        delayed_v = np.concatenate([delayed_v, velocities[instant]])
    offsets = delayed_x - positions[receivers]
    distances = np.sqrt(np.einsum("pd,pd->p", offsets, offsets))
    try:
        weights = kernel_evaluate(kernel, distances)
    except DomainError as exc:
        raise NumericBlowUpError(f"non-finite distance at t={t}: {exc}", time=t)
    accelerations = delays.receiver_mean @ (weights[:, None] * (delayed_v - velocities[receivers]))
    if not np.all(np.isfinite(accelerations)):
        raise NumericBlowUpError(f"non-finite acceleration at t={t}", time=t)
    return accelerations


def rhs(
    state: SystemState,
    history: HistoryBuffer,
    delays: DelayMatrix,
    kernel: KernelSpec,
) -> NDArray[np.float64]:
    """Accelerations a_i = (1/N) sum_{j != i} psi(|x_j(t-tau_ji) - x_i(t)|)(v_j(t-tau_ji) - v_i(t))."""
    delayed_x, delayed_v = delayed_neighbours(state.t, history, delays)
    return pair_accelerations(
        state.t, state.positions, state.velocities, delayed_x, delayed_v, delays, kernel
    )


def max_speed(state: SystemState) -> float:
    """R_v(t) = max_i |v_i(t)|."""
    return float(np.max(np.linalg.norm(state.velocities, axis=1)))


def initial_history_max_speed(history: InitialHistory | HistoryBuffer, density: int = 16) -> float:
    """R_v^tau: maximum speed over the initial history on [-tau, 0].

    Ballistic histories are exact; sampled histories are scanned at the knots
    and ``density`` points per knot interval.
    """
    initial = history.initial if isinstance(history, HistoryBuffer) else history
    return initial.max_speed(density=density)


def mean_velocity(state: SystemState) -> NDArray[np.float64]:
    return state.velocities.mean(axis=0)
