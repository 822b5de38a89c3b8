from __future__ import annotations

import importlib

import numpy as np
import pytest
from delayed_flocking.dynamics import (
    BallisticHistory,
    DelayMatrix,
    HistoryBuffer,
    SampledHistory,
    SystemState,
    build_scenario,
    initial_history_max_speed,
    max_speed,
    rng_streams,
)
from delayed_flocking.dynamics.rhs import rhs
from delayed_flocking.errors import ConfigurationError, StateError
from delayed_flocking.kernel import KernelSpec
from delayed_flocking.models import ScenarioConfig

FLAT = KernelSpec(beta_kernel=0.0)


def _buffer(history, delays: DelayMatrix, dimension: int = 2) -> HistoryBuffer:
    return HistoryBuffer(history, delays.tau_max, dimension)


def test_identical_velocities_give_zero_acceleration() -> None:
    config = ScenarioConfig(
        n_agents=6,
        seed=3,
        kernel=KernelSpec(beta_kernel=0.7),
        initial={"velocities": [[1.0, -2.0]] * 6},
        delays={"uniform": (0.01, 0.2)},
    )
    scenario = build_scenario(config)
    buffer = _buffer(scenario.history, scenario.delays)
    a = rhs(scenario.initial_state, buffer, scenario.delays, scenario.kernel)
    np.testing.assert_array_equal(a, np.zeros((6, 2)))


def test_two_agents_without_delay() -> None:
    delays = DelayMatrix.constant(2, 0.0, reference_mode=True)
    history = BallisticHistory([[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]], horizon=0.0)
    state = history.initial_state()
    a = rhs(state, _buffer(history, delays), delays, FLAT)
    np.testing.assert_allclose(a, [[-0.5, 0.0], [0.5, 0.0]])


def test_delayed_neighbour_is_read_from_the_history() -> None:
    times = np.array([-0.1, -0.05, 0.0])
    zeros = np.zeros_like(times)
    positions = np.stack(
        [np.column_stack([times, zeros]), np.column_stack([0.5 * times**2, zeros])], axis=1
    )
    velocities = np.stack(
        [np.column_stack([np.ones(3), zeros]), np.column_stack([times, zeros])], axis=1
    )
    accelerations = np.stack(
        [np.zeros((3, 2)), np.column_stack([np.ones(3), zeros])], axis=1
    )
    history = SampledHistory(times, positions, velocities, accelerations)
    delays = DelayMatrix.constant(2, 0.1)
    state = SystemState(0.05, [[0.05, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.05, 0.0]])

    a = rhs(state, _buffer(history, delays), delays, FLAT)
    # Agent 1 sees v_2(-0.05) = (-0.05, 0); agent 2 sees v_1(-0.05) = (1, 0).
    np.testing.assert_allclose(a[0], [0.5 * (-0.05 - 1.0), 0.0], atol=1e-15)
    np.testing.assert_allclose(a[1], [0.5 * (1.0 - 0.05), 0.0], atol=1e-15)


def test_accelerations_sum_to_zero_without_delay() -> None:
    config = ScenarioConfig(
        n_agents=7,
        dimension=3,
        seed=11,
        kernel=KernelSpec(beta_kernel=1.5),
        delays={"constant": 0.0},
        reference_mode=True,
    )
    scenario = build_scenario(config)
    a = rhs(
        scenario.initial_state,
        _buffer(scenario.history, scenario.delays, 3),
        scenario.delays,
        scenario.kernel,
    )
    np.testing.assert_allclose(a.sum(axis=0), 0.0, atol=1e-13)


def test_rhs_is_translation_invariant() -> None:
    rng = np.random.default_rng(5)
    x0, v0 = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
    delays = DelayMatrix.uniform(5, 0.02, 0.1, rng)
    kernel = KernelSpec(beta_kernel=2.0)
    shift = np.array([100.0, -40.0])

    base = BallisticHistory(x0, v0, horizon=delays.tau_max)
    moved = BallisticHistory(x0 + shift, v0, horizon=delays.tau_max)
    a = rhs(base.initial_state(), _buffer(base, delays), delays, kernel)
    b = rhs(moved.initial_state(), _buffer(moved, delays), delays, kernel)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_rhs_is_invariant_under_a_common_velocity_shift() -> None:
    rng = np.random.default_rng(9)
    x0, v0 = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
    delays = DelayMatrix.constant(6, 0.0, reference_mode=True)
    kernel = KernelSpec(beta_kernel=1.3)
    boost = np.array([2.5, -1.0, 0.75])

    base = BallisticHistory(x0, v0, horizon=0.0)
    boosted = BallisticHistory(x0, v0 + boost, horizon=0.0)
    a = rhs(base.initial_state(), _buffer(base, delays, 3), delays, kernel)
    b = rhs(boosted.initial_state(), _buffer(boosted, delays, 3), delays, kernel)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


def test_rhs_matches_the_pairwise_sum_with_mixed_lags() -> None:
    rng = np.random.default_rng(12)
    n = 4
    x0, v0 = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
    lags = np.array(
        [
            [0.0, 0.0, 0.05, 0.1],
            [0.0, 0.0, 0.02, 0.0],
            [0.05, 0.02, 0.0, 0.07],
            [0.1, 0.0, 0.07, 0.0],
        ]
    )
    delays = DelayMatrix.from_matrix(lags, reference_mode=True)
    kernel = KernelSpec(beta_kernel=0.8)
    history = BallisticHistory(x0, v0, horizon=0.1)
    state = history.initial_state()

    expected = np.zeros((n, 2))
    for i in range(n):
        for j in range(n):
            if i != j:
                xj = x0[j] - lags[j, i] * v0[j]
                weight = (1.0 + np.sum((xj - x0[i]) ** 2)) ** (-0.4)
                expected[i] += weight * (v0[j] - v0[i]) / n
    a = rhs(state, _buffer(history, delays), delays, kernel)
    np.testing.assert_allclose(a, expected, rtol=1e-12, atol=1e-15)


def test_rhs_submodule_is_not_shadowed_by_the_package() -> None:
    module = importlib.import_module("delayed_flocking.dynamics.rhs")
    assert module.rhs is rhs
    assert hasattr(module, "kernel_evaluate")


@pytest.mark.parametrize(
    ("velocities", "expected"),
    [
        ([[0.0, 0.0], [0.0, 0.0]], 0.0),
        ([[3.0, 4.0], [0.0, 1.0]], 5.0),
    ],
)
def test_max_speed(velocities: list[list[float]], expected: float) -> None:
    state = SystemState(0.0, np.zeros((2, 2)), velocities)
    assert max_speed(state) == pytest.approx(expected)


def test_max_speed_finds_the_dominant_agent() -> None:
    rng = np.random.default_rng(9)
    velocities = rng.uniform(-1, 1, size=(8, 2))
    velocities[4] = [30.0, -40.0]
    state = SystemState(0.0, np.zeros((8, 2)), velocities)
    assert max_speed(state) == pytest.approx(50.0)


def test_initial_history_max_speed_of_ballistic_history() -> None:
    velocities = [[1.0, 0.0], [0.0, 2.0], [0.3, 0.4]]
    history = BallisticHistory(np.zeros((3, 2)), velocities, horizon=0.1)
    assert initial_history_max_speed(history) == pytest.approx(2.0)
    rest = BallisticHistory(np.zeros((3, 2)), np.zeros((3, 2)), horizon=0.1)
    assert initial_history_max_speed(rest) == 0.0


def test_initial_history_max_speed_reads_the_buffer_history() -> None:
    times = np.array([-0.5, -0.25, 0.0])
    velocities = np.stack([np.column_stack([1.0 + times, np.zeros(3)])] * 2, axis=1)
    history = SampledHistory(times, np.zeros_like(velocities), velocities)
    buffer = HistoryBuffer(history, 0.5, 2)
    assert initial_history_max_speed(buffer) == pytest.approx(1.0)


def test_system_state_validation() -> None:
    with pytest.raises(StateError):
        SystemState(0.0, np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(StateError):
        SystemState(0.0, np.zeros((3, 2)), np.zeros((3, 3)))
    with pytest.raises(StateError):
        SystemState(0.0, [[0.0], [np.nan]], [[0.0], [0.0]]).validate()


@pytest.mark.parametrize(
    "matrix",
    [
        [[0.0, 0.1], [0.2, 0.0]],
        [[0.0, 0.0], [0.0, 0.0]],
        [[0.0, -0.1], [-0.1, 0.0]],
        [[0.0, 0.1, 0.1], [0.1, 0.0, 0.1]],
        [[0.0, np.inf], [np.inf, 0.0]],
    ],
)
def test_delay_matrix_rejects_invalid_entries(matrix: list[list[float]]) -> None:
    with pytest.raises(ConfigurationError):
        DelayMatrix.from_matrix(matrix)


def test_delay_matrix_allows_zero_lags_in_reference_mode() -> None:
    delays = DelayMatrix.from_matrix([[0.0, 0.0], [0.0, 0.0]], reference_mode=True)
    assert delays.tau_max == 0.0
    assert delays.positive_tau_min is None
    assert delays.delayed_pairs[0].size == 0


def test_delay_matrix_ignores_the_diagonal() -> None:
    delays = DelayMatrix.from_matrix([[5.0, 0.1, 0.3], [0.1, 9.0, 0.2], [0.3, 0.2, 0.0]])
    assert delays.tau_min == pytest.approx(0.1)
    assert delays.tau_max == pytest.approx(0.3)
    assert np.all(np.diag(delays.entries) == 0.0)


def test_delay_matrix_lags_follow_the_pairs() -> None:
    entries = np.array([[0.0, 0.1, 0.3], [0.1, 0.0, 0.2], [0.3, 0.2, 0.0]])
    delays = DelayMatrix.from_matrix(entries)
    receivers, sources = delays.delayed_pairs
    assert receivers.size == 6
    np.testing.assert_array_equal(delays.lags, entries[sources, receivers])


def test_uniform_delays_are_symmetric_and_in_range() -> None:
    rng = np.random.default_rng(0)
    delays = DelayMatrix.uniform(12, 0.02, 0.08, rng)
    np.testing.assert_array_equal(delays.entries, delays.entries.T)
    assert 0.02 <= delays.tau_min <= delays.tau_max <= 0.08


def test_rescaled_keeps_ratios() -> None:
    delays = DelayMatrix.from_matrix([[0.0, 0.1, 0.4], [0.1, 0.0, 0.2], [0.4, 0.2, 0.0]])
    scaled = delays.rescaled(0.08)
    assert scaled.tau_max == pytest.approx(0.08)
    np.testing.assert_allclose(scaled.entries, delays.entries * 0.2)
    with pytest.raises(ConfigurationError):
        delays.rescaled(0.0)


def test_build_scenario_is_deterministic_in_the_seed() -> None:
    config = ScenarioConfig(n_agents=10, seed=42, delays={"uniform": (0.01, 0.05)})
    first, second = build_scenario(config), build_scenario(config)
    np.testing.assert_array_equal(first.initial_state.positions, second.initial_state.positions)
    np.testing.assert_array_equal(first.initial_state.velocities, second.initial_state.velocities)
    np.testing.assert_array_equal(first.delays.entries, second.delays.entries)

    other = build_scenario(config.model_copy(update={"seed": 43}))
    assert not np.array_equal(first.initial_state.positions, other.initial_state.positions)


def test_random_velocities_stay_in_the_ball() -> None:
    config = ScenarioConfig(n_agents=50, dimension=3, seed=1, initial={"velocities": {"random_ball": 2.0}})
    velocities = build_scenario(config).initial_state.velocities
    assert np.linalg.norm(velocities, axis=1).max() <= 2.0


def test_rng_streams_are_independent() -> None:
    a, b, c = rng_streams(7)
    draws = [g.random(4) for g in (a, b, c)]
    assert not np.array_equal(draws[0], draws[1])
    assert not np.array_equal(draws[1], draws[2])
    np.testing.assert_array_equal(rng_streams(7)[0].random(4), draws[0])


def test_sampled_history_must_cover_the_largest_delay() -> None:
    times = [-0.05, 0.0]
    knots = [[[0.0], [1.0]], [[0.0], [1.0]]]
    config = ScenarioConfig(
        n_agents=2,
        dimension=1,
        history={"sampled": {"times": times, "positions": knots, "velocities": knots}},
        delays={"constant": 0.1},
    )
    with pytest.raises(ConfigurationError):
        build_scenario(config)


def test_with_delays_stretches_a_ballistic_history() -> None:
    scenario = build_scenario(ScenarioConfig(n_agents=3, delays={"constant": 0.05}))
    longer = scenario.with_delays(scenario.delays.rescaled(0.3))
    assert longer.history.horizon == pytest.approx(0.3)
    np.testing.assert_array_equal(longer.initial_state.positions, scenario.initial_state.positions)
