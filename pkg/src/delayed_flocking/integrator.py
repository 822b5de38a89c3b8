"""Method-of-steps integration of the delayed flock with fixed-step RK4.

Each step evaluates the classical four stages; delayed neighbour values are
read from the dense-output history, which is valid as long as ``dt`` does not
exceed the smallest positive delay. The acceleration at every new knot is
stored with it and reused as the first stage of the following step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificate import envelope
from .diagnostics.functionals import delta_N_tau, diameters, psi_floor, velocity_mismatch
from .diagnostics.series import DiagnosticsRecord, DiagnosticsSeries, SeriesMetadata
from .dynamics.delays import DelayMatrix
from .dynamics.history import HistoryBuffer, LagStencil
from .dynamics.rhs import (
    delayed_neighbours,
    initial_history_max_speed,
    max_speed,
    pair_accelerations,
)
from .dynamics.scenario import Scenario, build_scenario
from .dynamics.state import SystemState
from .errors import HistoryWindowError, IntegratorConfigError, NumericBlowUpError
from .logger import get_logger
from .models.data_model import FlockingCertificate
from .models.scenario_config import IntegratorConfig, KernelSpec, ScenarioConfig

logger = get_logger(__name__)

# Relative slack when comparing dt against tau_min.
_DT_RTOL = 1e-12


@dataclass(eq=False)
class SimulationResult:
    """Diagnostics, optional recorded states and the final history of one run."""

    scenario: Scenario
    config: IntegratorConfig
    series: DiagnosticsSeries
    final_state: SystemState
    history: HistoryBuffer
    R_v_tau: float
    max_acceleration: float
    states: list[SystemState] = field(default_factory=list)
    certificate: FlockingCertificate | None = None

    @property
    def initial_record(self) -> DiagnosticsRecord:
        return self.series[0]

    @property
    def final_record(self) -> DiagnosticsRecord:
        return self.series[-1]


def validate_step_size(dt: float, delays: DelayMatrix) -> None:
    """Enforce dt <= tau_min over the positive delays."""
    tau_min = delays.positive_tau_min
    if tau_min is not None and dt > tau_min * (1.0 + _DT_RTOL):
        raise IntegratorConfigError(
            f"dt={dt:.6g} exceeds tau_min={tau_min:.6g}; the method of steps requires dt <= tau_min"
        )


@dataclass(frozen=True, eq=False)
class StepPlan:
    """Lag stencils at the knot, half-step and full-step times of a run with knots at k * dt."""

    now: LagStencil
    half: LagStencil
    full: LagStencil

    @classmethod
    def build(cls, delays: DelayMatrix, dt: float) -> StepPlan | None:
        """None when there is nothing to look up (no positive delay or dt <= 0)."""
        sources = delays.delayed_pairs[1]
        if dt <= 0 or sources.size == 0:
            return None
        lags = delays.lags
        return cls(
            now=LagStencil(sources, lags, 0.0, dt),
            half=LagStencil(sources, lags, 0.5 * dt, dt),
            full=LagStencil(sources, lags, dt, dt),
        )


def _neighbours(
    history: HistoryBuffer,
    delays: DelayMatrix,
    t: float,
    dt: float,
    stencil: LagStencil | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    if stencil is not None:
        values = history.lookup_stencil(stencil, history.knot_index)
        if values is not None:
            return values
    try:
        return delayed_neighbours(t, history, delays)
    except HistoryWindowError as exc:
        raise IntegratorConfigError(
            f"stage lookup at t={t:.6g} left the history window ({exc}); "
            f"dt={dt:.6g} must satisfy dt <= tau_min"
        )


def start_history(scenario: Scenario, dt: float) -> HistoryBuffer:
    """History buffer holding the initial history plus the t = 0 knot."""
    delays = scenario.delays
    state = scenario.initial_state
    capacity = int(math.ceil(delays.tau_max / dt)) + 4 if dt > 0 else 4
    buffer = HistoryBuffer(scenario.history, delays.tau_max, state.dimension, capacity=capacity)
    xd, vd = _neighbours(buffer, delays, 0.0, dt)
    a0 = pair_accelerations(0.0, state.positions, state.velocities, xd, vd, delays, scenario.kernel)
    buffer.append(0.0, state.positions, state.velocities, a0)
    return buffer


def step(
    state: SystemState,
    history: HistoryBuffer,
    delays: DelayMatrix,
    kernel: KernelSpec,
    dt: float,
    t_next: float | None = None,
    plan: StepPlan | None = None,
) -> SystemState:
    """Advance ``state`` by one RK4 step and append the new knot to ``history``.

    ``t_next`` pins the new time (k+1)*dt so long runs do not accumulate
    round-off in t; it defaults to ``state.t + dt``. A ``plan`` may only be
    passed when every knot so far was appended at a multiple of ``dt``.
    The two middle stages share one set of delayed values, and so do the last
    stage and the acceleration stored with the new knot.
    """
    t = state.t
    t_knot, _, _, k1 = history.latest()
    if t_knot != t:
        raise IntegratorConfigError(f"history ends at t={t_knot}, state is at t={t}")
    x, v = state.positions, state.velocities
    half = 0.5 * dt

    xh, vh = _neighbours(history, delays, t + half, dt, None if plan is None else plan.half)
    x2 = x + half * v
    v2 = v + half * k1
    k2 = pair_accelerations(t + half, x2, v2, xh, vh, delays, kernel)

    x3 = x + half * v2
    v3 = v + half * k2
    k3 = pair_accelerations(t + half, x3, v3, xh, vh, delays, kernel)

    xf, vf = _neighbours(history, delays, t + dt, dt, None if plan is None else plan.full)
    x4 = x + dt * v3
    v4 = v + dt * k3
    k4 = pair_accelerations(t + dt, x4, v4, xf, vf, delays, kernel)

    t_new = t + dt if t_next is None else float(t_next)
    x_new = x + (dt / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    new_state = SystemState(t_new, x_new, v_new)
    if not new_state.is_finite():
        raise NumericBlowUpError(f"non-finite state at t={t_new}", time=t_new)

    a_new = pair_accelerations(t_new, x_new, v_new, xf, vf, delays, kernel)
    history.append(t_new, x_new, v_new, a_new)
    history.trim(t_new - delays.tau_max - dt)
    return new_state


def _record(
    state: SystemState,
    history: HistoryBuffer,
    scenario: Scenario,
    R_v_tau: float,
    certificate: FlockingCertificate | None,
    plan: StepPlan | None = None,
) -> DiagnosticsRecord:
    d_x, d_v = diameters(state)
    delays = scenario.delays
    values = None if plan is None else history.lookup_stencil(plan.now, history.knot_index)
    if values is None:
        delta = delta_N_tau(state.t, history, delays)
    else:
        delta = velocity_mismatch(delays, values[1], state.velocities[delays.delayed_pairs[1]])
    return DiagnosticsRecord(
        t=state.t,
        d_X=d_x,
        d_V=d_v,
        R_v=max_speed(state),
        delta_N_tau=delta,
        psi_floor=psi_floor(scenario.kernel, d_x, R_v_tau, delays.tau_max),
        envelope_dV=None if certificate is None else envelope(certificate, state.t)[0],
    )


def simulate(
    scenario: Scenario | ScenarioConfig,
    config: IntegratorConfig,
    certificate: FlockingCertificate | None = None,
    debug_checks: bool = True,
) -> SimulationResult:
    """Integrate from t = 0 to ``t_end`` and record diagnostics every ``output_stride`` steps.

    The last step is always recorded, so when ``n_steps`` is not a multiple of
    the stride the final gap between records is shorter than the spacing.

    Raises:
        IntegratorConfigError: dt exceeds the smallest positive delay.
        NumericBlowUpError: a state or acceleration component became non-finite.
    """
    if isinstance(scenario, ScenarioConfig):
        scenario = build_scenario(scenario)
    delays = scenario.delays
    dt = config.dt
    validate_step_size(dt, delays)

    n_steps = config.n_steps
    R_v_tau = initial_history_max_speed(scenario.history)
    logger.info(
        f"Simulating N={scenario.initial_state.n_agents} agents: dt={dt:g}, "
        f"steps={n_steps}, tau_max={delays.tau_max:g}"
    )

    history = start_history(scenario, dt)
    plan = StepPlan.build(delays, dt)
    state = scenario.initial_state
    max_accel = float(np.linalg.norm(history.latest()[3], axis=1).max())
    records = [_record(state, history, scenario, R_v_tau, certificate, plan)]
    states = [state.copy()] if config.record_states else []

    for k in range(1, n_steps + 1):
        state = step(state, history, delays, scenario.kernel, dt, t_next=k * dt, plan=plan)
        max_accel = max(max_accel, float(np.linalg.norm(history.latest()[3], axis=1).max()))
        if debug_checks:
            history.assert_covers(state.t - delays.tau_max)
        if k % config.output_stride == 0 or k == n_steps:
            record = _record(state, history, scenario, R_v_tau, certificate, plan)
            records.append(record)
            if config.record_states:
                states.append(state.copy())
            logger.debug(f"t={record.t:.6g} d_X={record.d_X:.6g} d_V={record.d_V:.6g}")

    metadata = SeriesMetadata(
        R_v_tau=R_v_tau,
        tau_max=delays.tau_max,
        n_agents=state.n_agents,
        spacing=dt * config.output_stride,
        reference_mode=scenario.reference_mode,
    )
    series = DiagnosticsSeries(records=records, metadata=metadata).with_residuals()
    logger.info(f"Finished at t={state.t:g}: d_V={records[-1].d_V:.6g}")
    return SimulationResult(
        scenario=scenario,
        config=config,
        series=series,
        final_state=state,
        history=history,
        R_v_tau=R_v_tau,
        max_acceleration=max_accel,
        states=states,
        certificate=certificate,
    )
