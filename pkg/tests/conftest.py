from __future__ import annotations

import pytest
from delayed_flocking.models import IntegratorConfig, KernelSpec, RunConfig, ScenarioConfig


@pytest.fixture
def delayed_scenario() -> ScenarioConfig:
    """Six agents, long-range kernel, random heterogeneous delays."""
    return ScenarioConfig(
        n_agents=6,
        dimension=2,
        seed=2024,
        kernel=KernelSpec(beta_kernel=0.5),
        initial={"positions": {"random_box": (-1.0, 1.0)}, "velocities": {"random_ball": 1.0}},
        delays={"uniform": (0.02, 0.05)},
    )


@pytest.fixture
def reference_scenario() -> ScenarioConfig:
    """Two agents, constant kernel, no delay: d_V decays exactly like exp(-t)."""
    return ScenarioConfig(
        n_agents=2,
        dimension=2,
        kernel=KernelSpec(beta_kernel=0.0),
        initial={"positions": [[0.0, 0.0], [1.0, 0.0]], "velocities": [[1.0, 0.0], [0.0, 0.0]]},
        delays={"constant": 0.0},
        reference_mode=True,
    )


@pytest.fixture
def delayed_run(delayed_scenario: ScenarioConfig) -> RunConfig:
    return RunConfig(
        scenario=delayed_scenario,
        integrator=IntegratorConfig(dt=0.01, t_end=2.0, output_stride=2),
    )
