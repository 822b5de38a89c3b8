"""Build runtime scenarios (kernel, delays, initial history) from configuration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..models.scenario_config import (
    ConstantDelays,
    KernelSpec,
    RandomBall,
    RandomBox,
    SampledHistoryConfig,
    ScenarioConfig,
    UniformDelays,
)
from .delays import DelayMatrix
from .history import BallisticHistory, InitialHistory, SampledHistory
from .state import SystemState


def rng_streams(seed: int, count: int = 3) -> list[np.random.Generator]:
    """Independent Philox streams spawned from ``SeedSequence(seed)``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def random_ball(rng: np.random.Generator, n: int, d: int, radius: float) -> np.ndarray:
    """n points uniform in the d-ball of ``radius``."""
    directions = rng.standard_normal((n, d))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = radius * rng.random((n, 1)) ** (1.0 / d)
    return directions / norms * radii


@dataclass(eq=False)
class Scenario:
    """Everything needed to integrate one delayed flock."""

    config: ScenarioConfig
    kernel: KernelSpec
    delays: DelayMatrix
    history: InitialHistory

    @property
    def initial_state(self) -> SystemState:
        return self.history.initial_state()

    @property
    def reference_mode(self) -> bool:
        return self.config.reference_mode

    def with_delays(self, delays: DelayMatrix) -> Scenario:
        """Same agents and history with a different delay matrix."""
        history = self.history
        if isinstance(history, BallisticHistory):
            history = BallisticHistory(history.positions, history.velocities, delays.tau_max)
        elif history.horizon < delays.tau_max:
            raise ConfigurationError(
                f"sampled history covers [-{history.horizon}, 0] but tau_max={delays.tau_max}"
            )
        return Scenario(config=self.config, kernel=self.kernel, delays=delays, history=history)


def build_delays(config: ScenarioConfig, rng: np.random.Generator) -> DelayMatrix:
    spec = config.delays
    n = config.n_agents
    if isinstance(spec, ConstantDelays):
        return DelayMatrix.constant(n, spec.constant, reference_mode=config.reference_mode)
    if isinstance(spec, UniformDelays):
        lo, hi = spec.uniform
        return DelayMatrix.uniform(n, lo, hi, rng, reference_mode=config.reference_mode)
    return DelayMatrix.from_matrix(spec.matrix, reference_mode=config.reference_mode)


def build_scenario(config: ScenarioConfig) -> Scenario:
    """Materialize agents, delays and the initial history (deterministic in the seed)."""
    position_rng, velocity_rng, delay_rng = rng_streams(config.seed)
    n, d = config.n_agents, config.dimension
    delays = build_delays(config, delay_rng)

    history: InitialHistory
    if isinstance(config.history, SampledHistoryConfig):
        knots = config.history.sampled
        history = SampledHistory(
            knots.times, knots.positions, knots.velocities, knots.accelerations
        )
        if history.horizon < delays.tau_max:
            raise ConfigurationError(
                f"history.sampled covers [-{history.horizon}, 0] but tau_max={delays.tau_max}"
            )
    else:
        positions = config.initial.positions
        if isinstance(positions, RandomBox):
            lo, hi = positions.random_box
            x0 = position_rng.uniform(lo, hi, size=(n, d))
        else:
            x0 = np.asarray(positions, dtype=float)
        velocities = config.initial.velocities
        if isinstance(velocities, RandomBall):
            v0 = random_ball(velocity_rng, n, d, velocities.random_ball)
        else:
            v0 = np.asarray(velocities, dtype=float)
        history = BallisticHistory(x0, v0, horizon=delays.tau_max)

    history.initial_state().validate()
    return Scenario(config=config, kernel=config.kernel, delays=delays, history=history)
