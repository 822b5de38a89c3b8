"""Agent and system state containers."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import StateError


@dataclass(frozen=True, eq=False)
class AgentState:
    """Position and velocity of one agent."""

    position: NDArray[np.float64]
    velocity: NDArray[np.float64]


@dataclass(eq=False)
class SystemState:
    """Time plus the (N, d) position and velocity arrays of all agents."""

    t: float
    positions: NDArray[np.float64] = field(repr=False)
    velocities: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        self.t = float(self.t)
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape != self.velocities.shape:
            raise StateError(
                "positions and velocities must share an (N, d) shape, got "
                f"{self.positions.shape} and {self.velocities.shape}"
            )
        if self.positions.shape[0] < 2:
            raise StateError(f"a system needs at least two agents, got {self.positions.shape[0]}")
        if self.positions.shape[1] < 1:
            raise StateError("agent dimension must be >= 1")

    @classmethod
    def from_agents(cls, t: float, agents: Sequence[AgentState]) -> SystemState:
        if not agents:
            raise StateError("cannot build a system state without agents")
        return cls(
            t=t,
            positions=np.stack([np.asarray(a.position, dtype=float) for a in agents]),
            velocities=np.stack([np.asarray(a.velocity, dtype=float) for a in agents]),
        )

    @classmethod
    def from_arrays(cls, t: float, positions: ArrayLike, velocities: ArrayLike) -> SystemState:
        return cls(t=t, positions=np.asarray(positions), velocities=np.asarray(velocities))

    @property
    def n_agents(self) -> int:
        return int(self.positions.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.positions.shape[1])

    @property
    def agents(self) -> list[AgentState]:
        return [
            AgentState(position=self.positions[i].copy(), velocity=self.velocities[i].copy())
            for i in range(self.n_agents)
        ]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities)))

    def validate(self) -> SystemState:
        if not self.is_finite():
            raise StateError(f"state at t={self.t} has non-finite components")
        return self

    def copy(self) -> SystemState:
        return SystemState(t=self.t, positions=self.positions.copy(), velocities=self.velocities.copy())
