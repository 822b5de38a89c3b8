from __future__ import annotations

import importlib
import math

import numpy as np
import pytest
from delayed_flocking.diagnostics import check_dissipative_inequalities, mean_velocity_drift
from delayed_flocking.diagnostics.checks import uniform_spacing
from delayed_flocking.dynamics import build_scenario
from delayed_flocking.errors import IntegratorConfigError, NumericBlowUpError
from delayed_flocking.integrator import StepPlan, simulate, start_history, step
from delayed_flocking.models import IntegratorConfig, KernelSpec, ScenarioConfig


def test_zero_velocity_spread_moves_rigidly() -> None:
    config = ScenarioConfig(
        n_agents=4,
        seed=8,
        kernel=KernelSpec(beta_kernel=1.0),
        initial={"velocities": [[0.5, -0.25]] * 4},
        delays={"uniform": (0.05, 0.1)},
    )
    scenario = build_scenario(config)
    history = start_history(scenario, 0.05)
    state = scenario.initial_state
    new = step(state, history, scenario.delays, scenario.kernel, 0.05)

    np.testing.assert_allclose(new.positions, state.positions + 0.05 * state.velocities, atol=1e-15)
    np.testing.assert_array_equal(new.velocities, state.velocities)
    assert new.t == pytest.approx(0.05)


def test_zero_velocity_spread_stays_flocked() -> None:
    config = ScenarioConfig(
        n_agents=5,
        seed=1,
        initial={"velocities": [[1.0, 1.0]] * 5},
        delays={"uniform": (0.02, 0.04)},
    )
    result = simulate(config, IntegratorConfig(dt=0.02, t_end=1.0))
    assert np.all(result.series.column("d_V") == 0.0)


def test_single_step_matches_rk4_of_the_linear_system(reference_scenario: ScenarioConfig) -> None:
    h = 0.1
    result = simulate(reference_scenario, IntegratorConfig(dt=h, t_end=h))
    # Relative velocity u = v1 - v2 obeys u' = -u; RK4 multiplies it by the degree-4 Taylor factor.
    factor = 1.0 - h + h**2 / 2 - h**3 / 6 + h**4 / 24
    v = result.final_state.velocities
    np.testing.assert_allclose(v[0] - v[1], [factor, 0.0], rtol=0, atol=1e-15)
    np.testing.assert_allclose(v.mean(axis=0), [0.5, 0.0], atol=1e-15)


def test_reference_run_decays_like_exp_minus_t(reference_scenario: ScenarioConfig) -> None:
    result = simulate(reference_scenario, IntegratorConfig(dt=0.01, t_end=5.0, output_stride=10))
    t = result.series.times
    np.testing.assert_allclose(result.series.column("d_V"), np.exp(-t), rtol=1e-8)


def test_step_larger_than_smallest_delay_is_rejected() -> None:
    config = ScenarioConfig(n_agents=3, delays={"matrix": [[0, 0.01, 0.1], [0.01, 0, 0.1], [0.1, 0.1, 0]]})
    with pytest.raises(IntegratorConfigError, match="tau_min"):
        simulate(config, IntegratorConfig(dt=0.02, t_end=1.0))


def test_step_equal_to_smallest_delay_is_accepted(delayed_scenario: ScenarioConfig) -> None:
    scenario = build_scenario(delayed_scenario)
    dt = scenario.delays.tau_min
    result = simulate(scenario, IntegratorConfig(dt=dt, t_end=10 * dt))
    assert len(result.series) == 11


def test_output_stride_thins_the_records(delayed_scenario: ScenarioConfig) -> None:
    result = simulate(delayed_scenario, IntegratorConfig(dt=0.01, t_end=1.0, output_stride=10))
    np.testing.assert_allclose(result.series.times, np.linspace(0.0, 1.0, 11), atol=1e-12)
    assert result.series.metadata.spacing == pytest.approx(0.1)
    assert result.series[-1].residual_dV is None
    assert result.series[0].residual_dV is not None


def test_identical_runs_are_bit_identical(delayed_scenario: ScenarioConfig) -> None:
    config = IntegratorConfig(dt=0.01, t_end=0.5)
    first = simulate(delayed_scenario, config).series.to_frame()
    second = simulate(delayed_scenario, config).series.to_frame()
    assert first.equals(second)


def test_velocity_stays_below_the_history_bound(delayed_scenario: ScenarioConfig) -> None:
    result = simulate(delayed_scenario, IntegratorConfig(dt=0.01, t_end=3.0))
    assert result.series.column("R_v").max() <= result.R_v_tau + 1e-8
    assert result.max_acceleration <= 2.0 * result.R_v_tau + 1e-8


def test_mean_velocity_is_conserved_without_delay() -> None:
    config = ScenarioConfig(
        n_agents=6, seed=4, kernel=KernelSpec(beta_kernel=1.2), delays={"constant": 0.0}, reference_mode=True
    )
    result = simulate(config, IntegratorConfig(dt=0.01, t_end=1.0, output_stride=10, record_states=True))
    assert len(result.states) == 11
    assert mean_velocity_drift(result.states) < 1e-12


def test_history_window_holds_the_largest_delay(delayed_scenario: ScenarioConfig) -> None:
    result = simulate(delayed_scenario, IntegratorConfig(dt=0.01, t_end=1.0))
    tau_max = result.scenario.delays.tau_max
    assert result.history.covers(result.final_state.t - tau_max)
    # Trimmed buffers hold about tau_max / dt knots, not the whole run.
    assert result.history.n_knots <= math.ceil(tau_max / 0.01) + 4


def test_convergence_is_fourth_order() -> None:
    config = ScenarioConfig(
        n_agents=4,
        seed=5,
        kernel=KernelSpec(beta_kernel=1.0),
        delays={"constant": 0.1},
    )
    finals = [
        simulate(config, IntegratorConfig(dt=dt, t_end=1.0)).final_state.velocities
        for dt in (0.05, 0.025, 0.0125)
    ]
    coarse = np.abs(finals[0] - finals[1]).max()
    fine = np.abs(finals[1] - finals[2]).max()
    assert coarse / fine > 8.0


def test_blow_up_reports_the_time(monkeypatch: pytest.MonkeyPatch, delayed_scenario: ScenarioConfig) -> None:
    rhs_module = importlib.import_module("delayed_flocking.dynamics.rhs")

    original = rhs_module.kernel_evaluate
    calls = {"n": 0}

    def corrupted(kernel, r):
        calls["n"] += 1
        weights = original(kernel, r)
        return weights * np.nan if calls["n"] > 10 else weights

    monkeypatch.setattr(rhs_module, "kernel_evaluate", corrupted)
    with pytest.raises(NumericBlowUpError) as excinfo:
        simulate(delayed_scenario, IntegratorConfig(dt=0.01, t_end=1.0))
    assert excinfo.value.time is not None
    assert 0.0 < excinfo.value.time < 0.1


def test_last_step_is_recorded_off_the_stride(delayed_scenario: ScenarioConfig) -> None:
    result = simulate(delayed_scenario, IntegratorConfig(dt=0.01, t_end=1.0, output_stride=30))
    np.testing.assert_allclose(result.series.times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)
    assert result.final_record.t == pytest.approx(result.final_state.t)
    assert uniform_spacing(result.series, expected=result.series.metadata.spacing) == pytest.approx(0.3)
    report = check_dissipative_inequalities(
        result.series,
        result.scenario.delays.tau_max,
        result.series.metadata.spacing,
        kernel=result.scenario.kernel,
        R_v_tau=result.R_v_tau,
    )
    assert report.passed, report


def test_step_plan_agrees_with_general_lookups(delayed_scenario: ScenarioConfig) -> None:
    dt = 0.01
    result = simulate(delayed_scenario, IntegratorConfig(dt=dt, t_end=0.5))
    scenario = result.scenario
    history = start_history(scenario, dt)
    state = scenario.initial_state
    for k in range(1, 51):
        state = step(state, history, scenario.delays, scenario.kernel, dt, t_next=k * dt)
    np.testing.assert_allclose(result.final_state.positions, state.positions, rtol=0, atol=1e-12)
    np.testing.assert_allclose(result.final_state.velocities, state.velocities, rtol=0, atol=1e-12)


def test_step_plan_is_skipped_without_positive_delays(reference_scenario: ScenarioConfig) -> None:
    scenario = build_scenario(reference_scenario)
    assert StepPlan.build(scenario.delays, 0.01) is None
