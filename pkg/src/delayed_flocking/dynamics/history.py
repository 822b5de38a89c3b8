"""Initial histories on [-tau, 0] and the dense-output knot buffer for t >= 0.

Simulated trajectories are stored as knots (t_k, x_k, v_k, a_k). Between two
knots positions are cubic-Hermite interpolated from (x, v) and velocities from
(v, a), so both are exact on cubic trajectories.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import HistoryWindowError, StateError
from ..models.data_types import HistoryKind
from .state import SystemState

# Relative slack when comparing lookup times against window edges.
_TIME_EPS = 1e-12


def _time_slack(t: float) -> float:
    return _TIME_EPS * max(1.0, abs(t))


def hermite(
    theta: NDArray[np.float64],
    h: NDArray[np.float64],
    y0: NDArray[np.float64],
    dy0: NDArray[np.float64],
    y1: NDArray[np.float64],
    dy1: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Cubic Hermite interpolant on [t0, t0 + h] at normalized offsets ``theta``."""
    theta2 = theta * theta
    theta3 = theta2 * theta
    h00 = 2.0 * theta3 - 3.0 * theta2 + 1.0
    h10 = theta3 - 2.0 * theta2 + theta
    h01 = -2.0 * theta3 + 3.0 * theta2
    h11 = theta3 - theta2
    return h00 * y0 + h10 * h * dy0 + h01 * y1 + h11 * h * dy1


class HermiteTable:
    """Knot arrays shaped (K,), (K, N, d) x3 with vectorized per-agent lookup."""

    def __init__(
        self,
        times: NDArray[np.float64],
        positions: NDArray[np.float64],
        velocities: NDArray[np.float64],
        accelerations: NDArray[np.float64],
    ) -> None:
        self.times = times
        self.positions = positions
        self.velocities = velocities
        self.accelerations = accelerations

    def evaluate(
        self, agents: NDArray[np.intp], s: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        times = self.times
        if times.size == 0:
            raise StateError("history buffer is empty")
        if times.size == 1:
            return self.positions[0, agents].copy(), self.velocities[0, agents].copy()

        k = np.clip(np.searchsorted(times, s, side="right") - 1, 0, times.size - 2)
        t0 = times[k]
        h = (times[k + 1] - t0)[:, None]
        theta = ((s - t0)[:, None]) / h
        x = hermite(
            theta,
            h,
            self.positions[k, agents],
            self.velocities[k, agents],
            self.positions[k + 1, agents],
            self.velocities[k + 1, agents],
        )
        v = hermite(
            theta,
            h,
            self.velocities[k, agents],
            self.accelerations[k, agents],
            self.velocities[k + 1, agents],
            self.accelerations[k + 1, agents],
        )
        return x, v


class LagStencil:
    """Hermite weights for lookups at ``t_n + offset - lag`` on knots ``t_k = k * dt``.

    On a uniform knot grid the bracketing interval of each lookup sits a fixed
    number of knots behind the base knot ``n``, so the interpolation weights
    do not change from step to step.
    """

    def __init__(
        self, agents: ArrayLike, lags: ArrayLike, offset: float, dt: float
    ) -> None:
        if dt <= 0:
            raise StateError(f"stencil spacing must be > 0, got {dt}")
        self.agents = np.asarray(agents, dtype=np.intp)
        self.dt = float(dt)
        u = (float(offset) - np.asarray(lags, dtype=float)) / self.dt
        nearest = np.round(u)
        u = np.minimum(np.where(np.abs(u - nearest) < 1e-9, nearest, u), 0.0)
        # Left knot offset relative to n; theta lies in (0, 1].
        self.shift = (np.ceil(u) - 1.0).astype(np.intp)
        theta = (u - self.shift)[:, None]
        theta2 = theta * theta
        theta3 = theta2 * theta
        self.w10 = (theta3 - 2.0 * theta2 + theta) * self.dt
        self.w01 = -2.0 * theta3 + 3.0 * theta2
        self.w11 = (theta3 - theta2) * self.dt
        self.lowest = int(self.shift.min()) if self.shift.size else 0
        self.highest = int(self.shift.max()) + 1 if self.shift.size else 0


class InitialHistory(ABC):
    """Prescribed trajectory (x0_i(s), v0_i(s)) for s in [-horizon, 0]."""

    kind: HistoryKind

    def __init__(self, horizon: float) -> None:
        if horizon < 0 or not np.isfinite(horizon):
            raise StateError(f"history horizon must be finite and >= 0, got {horizon}")
        self.horizon = float(horizon)

    @property
    @abstractmethod
    def n_agents(self) -> int: ...

    @abstractmethod
    def _evaluate(
        self, agents: NDArray[np.intp], s: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]: ...

    @abstractmethod
    def max_speed(self, density: int = 16) -> float:
        """Max over agents and s in [-horizon, 0] of |v0_i(s)|."""

    def evaluate(
        self, agents: ArrayLike, s: ArrayLike
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        agents_arr = np.asarray(agents, dtype=np.intp)
        s_arr = np.asarray(s, dtype=float)
        if s_arr.size:
            lo = -self.horizon - _time_slack(self.horizon)
            if s_arr.min() < lo or s_arr.max() > _time_slack(0.0):
                raise HistoryWindowError(
                    f"initial history lookup at s in [{s_arr.min()}, {s_arr.max()}] "
                    f"outside [{-self.horizon}, 0]"
                )
        return self._evaluate(agents_arr, np.clip(s_arr, -self.horizon, 0.0))

    def initial_state(self) -> SystemState:
        agents = np.arange(self.n_agents)
        x, v = self.evaluate(agents, np.zeros(self.n_agents))
        return SystemState(t=0.0, positions=x, velocities=v)


class BallisticHistory(InitialHistory):
    """Constant-velocity motion x0_i(s) = x_i(0) + s v_i(0), v0_i(s) = v_i(0)."""

    kind = HistoryKind.BALLISTIC

    def __init__(self, positions: ArrayLike, velocities: ArrayLike, horizon: float) -> None:
        super().__init__(horizon)
        self.positions = np.array(positions, dtype=float)
        self.velocities = np.array(velocities, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape != self.velocities.shape:
            raise StateError("ballistic history needs (N, d) positions and velocities")

    @property
    def n_agents(self) -> int:
        return int(self.positions.shape[0])

    def _evaluate(self, agents, s):
        x = self.positions[agents] + s[:, None] * self.velocities[agents]
        return x, self.velocities[agents].copy()

    def max_speed(self, density: int = 16) -> float:
        return float(np.max(np.linalg.norm(self.velocities, axis=1)))


class SampledHistory(InitialHistory):
    """User-provided knots on [-horizon, 0], Hermite-interpolated.

    Without explicit accelerations the velocity derivative at each knot is
    estimated with ``numpy.gradient`` (second order inside, first order at the
    ends), which is exact for velocities linear in s.
    """

    kind = HistoryKind.SAMPLED

    def __init__(
        self,
        times: ArrayLike,
        positions: ArrayLike,
        velocities: ArrayLike,
        accelerations: ArrayLike | None = None,
    ) -> None:
        times_arr = np.asarray(times, dtype=float)
        if times_arr.size < 2:
            raise StateError("sampled history needs at least two knots")
        if np.any(np.diff(times_arr) <= 0):
            raise StateError("sampled history times must be strictly increasing")
        if times_arr[-1] != 0.0:
            raise StateError("sampled history must end at s = 0")
        super().__init__(-float(times_arr[0]))

        positions_arr = np.asarray(positions, dtype=float)
        velocities_arr = np.asarray(velocities, dtype=float)
        if accelerations is None:
            accelerations_arr = np.gradient(velocities_arr, times_arr, axis=0)
        else:
            accelerations_arr = np.asarray(accelerations, dtype=float)
        expected = (times_arr.size,) + positions_arr.shape[1:]
        for name, arr in (
            ("positions", positions_arr),
            ("velocities", velocities_arr),
            ("accelerations", accelerations_arr),
        ):
            if arr.ndim != 3 or arr.shape != expected:
                raise StateError(f"sampled history {name} must have shape {expected}")
        self.table = HermiteTable(times_arr, positions_arr, velocities_arr, accelerations_arr)

    @property
    def n_agents(self) -> int:
        return int(self.table.positions.shape[1])

    def _evaluate(self, agents, s):
        return self.table.evaluate(agents, s)

    def max_speed(self, density: int = 16) -> float:
        """Max over the knots and ``density`` interior points per knot interval."""
        times = self.table.times
        offsets = np.linspace(0.0, 1.0, max(density, 1) + 1)
        samples = np.unique(
            (times[:-1, None] + offsets[None, :] * np.diff(times)[:, None]).ravel()
        )
        n = self.n_agents
        agents = np.tile(np.arange(n), samples.size)
        s = np.repeat(samples, n)
        _, v = self.table.evaluate(agents, s)
        return float(np.max(np.linalg.norm(v, axis=1)))


class HistoryBuffer:
    """Initial history plus chronologically ordered knots of the simulated run."""

    def __init__(
        self,
        initial: InitialHistory,
        tau_max: float,
        dimension: int,
        capacity: int = 64,
    ) -> None:
        self.initial = initial
        self.tau_max = float(tau_max)
        n = initial.n_agents
        self._capacity = max(int(capacity), 4)
        self._times = np.empty(self._capacity)
        self._x = np.empty((self._capacity, n, dimension))
        self._v = np.empty_like(self._x)
        self._a = np.empty_like(self._x)
        self._start = 0
        self._end = 0
        self._appended = 0
        self._table: HermiteTable | None = None

    # Knot storage -------------------------------------------------------
    @property
    def n_knots(self) -> int:
        return self._end - self._start

    @property
    def dimension(self) -> int:
        return int(self._x.shape[2])

    @property
    def is_empty(self) -> bool:
        return self._end == self._start

    @property
    def t_now(self) -> float:
        if self.is_empty:
            raise StateError("history buffer is empty")
        return float(self._times[self._end - 1])

    @property
    def t_first(self) -> float:
        if self.is_empty:
            raise StateError("history buffer is empty")
        return float(self._times[self._start])

    @property
    def knot_index(self) -> int:
        """Number of knots appended so far minus one; the t = 0 knot has index 0."""
        return self._appended - 1

    def table(self) -> HermiteTable:
        if self._table is None:
            window = slice(self._start, self._end)
            self._table = HermiteTable(
                self._times[window], self._x[window], self._v[window], self._a[window]
            )
        return self._table

    def append(
        self,
        t: float,
        positions: NDArray[np.float64],
        velocities: NDArray[np.float64],
        accelerations: NDArray[np.float64],
    ) -> None:
        if not self.is_empty and t <= self.t_now:
            raise StateError(f"knot time {t} does not advance past {self.t_now}")
        if self._end == self._capacity:
            self._make_room()
        k = self._end
        self._times[k] = t
        self._x[k] = positions
        self._v[k] = velocities
        self._a[k] = accelerations
        self._end += 1
        self._appended += 1
        self._table = None

    def _make_room(self) -> None:
        count = self.n_knots
        if 2 * count > self._capacity:
            self._capacity *= 2
            times = np.empty(self._capacity)
            x = np.empty((self._capacity,) + self._x.shape[1:])
            v, a = np.empty_like(x), np.empty_like(x)
        else:
            times, x, v, a = self._times, self._x, self._v, self._a
        window = slice(self._start, self._end)
        times[:count] = self._times[window]
        x[:count] = self._x[window]
        v[:count] = self._v[window]
        a[:count] = self._a[window]
        self._times, self._x, self._v, self._a = times, x, v, a
        self._start, self._end = 0, count
        self._table = None

    def trim(self, t_keep: float) -> None:
        """Drop knots older than ``t_keep`` except the one bracketing it from the left."""
        if self.is_empty:
            return
        times = self._times[self._start : self._end]
        first_kept = int(np.searchsorted(times, t_keep, side="left"))
        if first_kept > 1:
            self._start += first_kept - 1
            self._table = None

    def latest(self) -> tuple[float, NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        k = self._end - 1
        if k < self._start:
            raise StateError("history buffer is empty")
        return float(self._times[k]), self._x[k], self._v[k], self._a[k]

    def accelerations(self) -> NDArray[np.float64]:
        return self._a[self._start : self._end]

    # Coverage -----------------------------------------------------------
    def covers(self, t_from: float) -> bool:
        """True when every s in [t_from, t_now] can be looked up."""
        if self.is_empty:
            return False
        if t_from <= 0.0:
            return t_from >= -self.initial.horizon - _time_slack(self.initial.horizon) and (
                self.t_first <= _time_slack(0.0)
            )
        return self.t_first <= t_from + _time_slack(t_from)

    def assert_covers(self, t_from: float) -> None:
        if not self.covers(t_from):
            first = None if self.is_empty else self.t_first
            raise HistoryWindowError(
                f"history does not cover [{t_from}, t_now]; first stored knot is {first}"
            )

    # Lookup -------------------------------------------------------------
    def lookup_many(
        self, agents: ArrayLike, s: ArrayLike
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Delayed (x_j(s), v_j(s)) for paired arrays of agent indices and times."""
        agents_arr = np.asarray(agents, dtype=np.intp)
        s_arr = np.asarray(s, dtype=float)
        pre = s_arr <= 0.0
        if np.all(pre):
            return self.initial.evaluate(agents_arr, s_arr)

        if self.is_empty:
            raise StateError("history buffer is empty")
        t_now = self.t_now
        t_first = self.t_first
        post_s = s_arr[~pre]
        if post_s.max() > t_now + _time_slack(t_now):
            raise HistoryWindowError(
                f"lookup at s={post_s.max()} is in the future of t_now={t_now}"
            )
        if post_s.min() < t_first - _time_slack(t_first):
            raise HistoryWindowError(
                f"lookup at s={post_s.min()} precedes the stored window starting at {t_first}"
            )
        post_x, post_v = self.table().evaluate(agents_arr[~pre], np.clip(post_s, t_first, t_now))
        if not np.any(pre):
            return post_x, post_v

        dimension = self._x.shape[2]
        x = np.empty((s_arr.size, dimension))
        v = np.empty_like(x)
        x[~pre], v[~pre] = post_x, post_v
        x[pre], v[pre] = self.initial.evaluate(agents_arr[pre], s_arr[pre])
        return x, v

    def lookup_stencil(
        self, stencil: LagStencil, base: int
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]] | None:
        """Delayed (x, v) at ``t_base + offset - lag`` for knots appended every ``stencil.dt``.

        Knot k must sit at t = k * stencil.dt.
        Returns None when a lookup reaches back before t = 0 or outside the
        stored knots; callers then fall back to :meth:`lookup_many`.
        """
        if base + stencil.lowest < 0:
            return None
        to_position = base + self._end - self._appended
        if to_position + stencil.lowest < self._start or to_position + stencil.highest >= self._end:
            return None
        left = stencil.shift + to_position
        right = left + 1
        agents = stencil.agents
        # h00 = 1 - h01, written so constant data is reproduced exactly.
        x0, v0 = self._x[left, agents], self._v[left, agents]
        v1 = self._v[right, agents]
        x = x0 + stencil.w01 * (self._x[right, agents] - x0) + stencil.w10 * v0 + stencil.w11 * v1
        v = (
            v0
            + stencil.w01 * (v1 - v0)
            + stencil.w10 * self._a[left, agents]
            + stencil.w11 * self._a[right, agents]
        )
        return x, v

    def lookup(self, agent: int, s: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Position and velocity of ``agent`` at time ``s``."""
        x, v = self.lookup_many(np.array([agent]), np.array([s]))
        return x[0], v[0]
