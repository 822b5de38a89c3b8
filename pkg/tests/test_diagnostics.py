from __future__ import annotations

import numpy as np
import pytest
from delayed_flocking.diagnostics import (
    DiagnosticsSeries,
    SeriesMetadata,
    delta_N_tau,
    diameters,
    fit_decay_rate,
    fit_log_linear,
    max_acceleration,
    mean_velocity_drift,
    psi_floor,
)
from delayed_flocking.dynamics import (
    BallisticHistory,
    DelayMatrix,
    HistoryBuffer,
    SampledHistory,
    SystemState,
)
from delayed_flocking.errors import InsufficientDataError, UsageError
from delayed_flocking.integrator import simulate
from delayed_flocking.models import IntegratorConfig, KernelSpec, ScenarioConfig


@pytest.mark.parametrize(
    ("positions", "velocities", "expected"),
    [
        ([[1.0, 2.0], [1.0, 2.0]], [[0.0, 1.0], [0.0, 1.0]], (0.0, 0.0)),
        ([[0.0, 0.0], [3.0, 4.0]], [[1.0, 0.0], [1.0, 0.0]], (5.0, 0.0)),
        ([[0.0], [1.0], [5.0]], [[0.0], [0.0], [0.0]], (5.0, 0.0)),
    ],
)
def test_diameters(positions, velocities, expected) -> None:
    assert diameters(SystemState(0.0, positions, velocities)) == pytest.approx(expected)


def test_diameters_match_brute_force() -> None:
    rng = np.random.default_rng(0)
    state = SystemState(0.0, rng.normal(size=(9, 3)), rng.normal(size=(9, 3)))
    brute = max(
        np.linalg.norm(state.positions[i] - state.positions[j]) for i in range(9) for j in range(9)
    )
    assert diameters(state)[0] == pytest.approx(brute, rel=1e-15)


def _buffer_at_zero(history, delays: DelayMatrix) -> HistoryBuffer:
    buffer = HistoryBuffer(history, delays.tau_max, history.initial_state().dimension)
    state = history.initial_state()
    buffer.append(0.0, state.positions, state.velocities, np.zeros_like(state.velocities))
    return buffer


def test_delta_vanishes_on_ballistic_history() -> None:
    rng = np.random.default_rng(1)
    delays = DelayMatrix.uniform(5, 0.1, 0.3, rng)
    history = BallisticHistory(rng.normal(size=(5, 2)), rng.normal(size=(5, 2)), horizon=0.3)
    assert delta_N_tau(0.0, _buffer_at_zero(history, delays), delays) == 0.0


def test_delta_vanishes_without_delay() -> None:
    delays = DelayMatrix.constant(3, 0.0, reference_mode=True)
    history = BallisticHistory(np.zeros((3, 1)), [[0.0], [1.0], [2.0]], horizon=0.0)
    assert delta_N_tau(0.0, _buffer_at_zero(history, delays), delays) == 0.0


def test_delta_with_linear_velocity_history() -> None:
    times = np.array([-0.2, -0.1, 0.0])
    zeros = np.zeros(3)
    velocities = np.stack(
        [np.column_stack([np.ones(3), zeros]), np.column_stack([times, zeros])], axis=1
    )
    accelerations = np.stack([np.zeros((3, 2)), np.column_stack([np.ones(3), zeros])], axis=1)
    history = SampledHistory(times, np.zeros_like(velocities), velocities, accelerations)
    delays = DelayMatrix.constant(2, 0.1)
    # Receiver 1 sees |v_2(-0.1) - v_2(0)| = 0.1; receiver 2 sees a constant velocity.
    assert delta_N_tau(0.0, _buffer_at_zero(history, delays), delays) == pytest.approx(0.05)


def test_delta_matches_brute_force_after_a_run() -> None:
    config = ScenarioConfig(n_agents=5, seed=12, kernel=KernelSpec(beta_kernel=0.8), delays={"uniform": (0.05, 0.2)})
    result = simulate(config, IntegratorConfig(dt=0.05, t_end=1.0))
    history, delays = result.history, result.scenario.delays
    t = result.final_state.t
    n = delays.n_agents
    sums = []
    for i in range(n):
        total = 0.0
        for k in range(n):
            if k == i:
                continue
            _, delayed = history.lookup(k, t - delays.entries[k, i])
            _, current = history.lookup(k, t)
            total += float(np.linalg.norm(delayed - current))
        sums.append(total)
    assert delta_N_tau(t, history, delays) == pytest.approx(max(sums) / n, rel=1e-12)
    assert result.series[-1].delta_N_tau == pytest.approx(max(sums) / n, rel=1e-12)


def test_psi_floor_evaluates_the_kernel_at_the_delayed_radius() -> None:
    kernel = KernelSpec(beta_kernel=2.0)
    assert psi_floor(kernel, 1.0, 0.0, 0.5) == pytest.approx(0.5)
    assert psi_floor(kernel, 0.5, 1.0, 0.5) == pytest.approx(0.5)
    assert psi_floor(KernelSpec(beta_kernel=0.0), 100.0, 3.0, 1.0) == 1.0


def test_max_acceleration_of_an_empty_buffer_is_zero() -> None:
    history = BallisticHistory(np.zeros((2, 2)), np.zeros((2, 2)), horizon=0.1)
    assert max_acceleration(HistoryBuffer(history, 0.1, 2)) == 0.0


def test_mean_velocity_drift_needs_two_states() -> None:
    state = SystemState(0.0, np.zeros((2, 2)), np.ones((2, 2)))
    with pytest.raises(InsufficientDataError):
        mean_velocity_drift([state])
    moved = SystemState(2.0, np.zeros((2, 2)), [[1.0, 1.0], [3.0, 1.0]])
    assert mean_velocity_drift([state, moved]) == pytest.approx(0.5)


def test_series_round_trips_through_csv(tmp_path) -> None:
    series = DiagnosticsSeries.from_arrays(
        [0.0, 0.1, 0.2], [1.0, 0.9, 0.8], delta_N_tau=[0.0, 0.01, 0.02]
    ).with_residuals()
    path = series.to_csv(tmp_path / "diagnostics.csv")
    header = path.read_text().splitlines()[0]
    assert header == "t,d_X,d_V,R_v,delta_N_tau,psi_floor,envelope_dV,residual_dV"
    loaded = DiagnosticsSeries.read_csv(path)
    np.testing.assert_allclose(loaded.column("d_V"), [1.0, 0.9, 0.8])
    assert loaded[-1].residual_dV is None
    assert loaded[0].envelope_dV is None
    assert not loaded.has_envelope


def test_residuals_use_forward_differences() -> None:
    series = DiagnosticsSeries.from_arrays(
        [0.0, 0.5, 1.0], [1.0, 0.5, 0.25], psi_floor=[1.0, 1.0, 1.0], delta_N_tau=[0.1, 0.0, 0.0]
    ).with_residuals()
    # (0.5 - 1)/0.5 - (-1 + 0.2) = -1 + 0.8
    assert series[0].residual_dV == pytest.approx(-0.2)
    assert series[1].residual_dV == pytest.approx(-0.5 + 0.5)


def test_unknown_column_is_a_usage_error() -> None:
    with pytest.raises(UsageError):
        DiagnosticsSeries.from_arrays([0.0], [1.0]).column("speed")


def test_exact_exponential_is_recovered() -> None:
    t = np.linspace(0.0, 10.0, 101)
    fit = fit_log_linear(t, 2.0 * np.exp(-0.7 * t))
    assert fit.amplitude == pytest.approx(2.0, abs=1e-9)
    assert fit.rate == pytest.approx(0.7, abs=1e-9)
    assert fit.rms_residual < 1e-12
    assert fit.n_points == 101


def test_constant_series_has_zero_rate() -> None:
    fit = fit_log_linear(np.arange(5.0), np.full(5, 3.0))
    assert fit.rate == pytest.approx(0.0, abs=1e-14)
    assert fit.amplitude == pytest.approx(3.0)


def test_fit_needs_three_usable_points() -> None:
    with pytest.raises(InsufficientDataError):
        fit_log_linear([0.0, 1.0, 2.0, 3.0], [1.0, 0.5, 0.0, 0.0])
    with pytest.raises(InsufficientDataError):
        fit_log_linear([0.0, 1.0, 2.0, 3.0], [1.0, 0.5, 0.2, 0.1], t_start=1.5)


def test_fit_decay_rate_skips_five_delays_by_default() -> None:
    t = np.linspace(0.0, 4.0, 41)
    d_v = np.where(t < 0.5, 10.0, np.exp(-t))
    series = DiagnosticsSeries.from_arrays(t, d_v, metadata=SeriesMetadata(tau_max=0.1))
    fit = fit_decay_rate(series)
    assert fit.t_start == pytest.approx(0.5)
    assert fit.rate == pytest.approx(1.0, abs=1e-9)


def test_reference_run_fits_unit_rate(reference_scenario: ScenarioConfig) -> None:
    result = simulate(reference_scenario, IntegratorConfig(dt=0.01, t_end=10.0, output_stride=10))
    assert fit_decay_rate(result.series).rate == pytest.approx(1.0, abs=1e-4)
