"""Position/velocity diameters and the delayed-velocity mismatch functional."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import pdist

from ..dynamics.delays import DelayMatrix
from ..dynamics.history import HistoryBuffer
from ..dynamics.rhs import mean_velocity
from ..dynamics.state import SystemState
from ..errors import InsufficientDataError
from ..kernel import evaluate as kernel_evaluate
from ..models.scenario_config import KernelSpec


def diameters(state: SystemState) -> tuple[float, float]:
    """(d_X, d_V): exact maximum pairwise Euclidean distances."""
    d_x = float(pdist(state.positions).max())
    d_v = float(pdist(state.velocities).max())
    return d_x, d_v


def delta_N_tau(t: float, history: HistoryBuffer, delays: DelayMatrix) -> float:
    """(1/N) max_i sum_{k != i} |v_k(t - tau_ki) - v_k(t)|."""
    receivers, sources = delays.delayed_pairs
    if receivers.size == 0:
        return 0.0
    _, delayed = history.lookup_many(sources, t - delays.lags)
    _, current = history.lookup_many(sources, np.full(sources.size, float(t)))
    return velocity_mismatch(delays, delayed, current)


def velocity_mismatch(
    delays: DelayMatrix, delayed_v: NDArray[np.float64], current_v: NDArray[np.float64]
) -> float:
    """Delta from delayed and current source velocities ordered like ``delays.delayed_pairs``."""
    receivers = delays.delayed_pairs[0]
    if receivers.size == 0:
        return 0.0
    mismatch = np.linalg.norm(delayed_v - current_v, axis=1)
    n = delays.n_agents
    per_receiver = np.bincount(receivers, weights=mismatch, minlength=n)
    return float(per_receiver.max() / n)


def psi_floor(kernel: KernelSpec, d_X: float, R_v_tau: float, tau: float) -> float:
    """Lower bound psi(d_X + R_v^tau tau) on every delayed pairwise weight."""
    return float(kernel_evaluate(kernel, d_X + R_v_tau * tau))


def max_acceleration(history: HistoryBuffer) -> float:
    """Largest stored |a_i| over the knots still held in the buffer."""
    accelerations = history.accelerations()
    if accelerations.size == 0:
        return 0.0
    return float(np.linalg.norm(accelerations, axis=-1).max())


def mean_velocity_drift(states: Sequence[SystemState]) -> float:
    """max_k |m(t_k) - m(t_0)| / (t_k - t_0) for the mean velocity m."""
    if len(states) < 2:
        raise InsufficientDataError("mean velocity drift needs at least two states")
    m0 = mean_velocity(states[0])
    t0 = states[0].t
    rates = [
        float(np.linalg.norm(mean_velocity(state) - m0)) / (state.t - t0)
        for state in states[1:]
        if state.t > t0
    ]
    if not rates:
        raise InsufficientDataError("mean velocity drift needs states at distinct times")
    return max(rates)
