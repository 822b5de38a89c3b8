"""Pydantic models describing scenario, integrator and run configuration files."""

from __future__ import annotations

import math
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .data_types import DelayKind, HistoryKind, KernelFamily

_SCENARIO_KEYS = {
    "n_agents",
    "dimension",
    "seed",
    "kernel",
    "initial",
    "history",
    "delays",
    "reference_mode",
}

U64_MAX = 2**64 - 1


def _require_finite(value: float, name: str) -> float:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


class KernelSpec(BaseModel):
    """Communication weight psi(r) = (1 + r^2)^(-beta/2)."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    family: KernelFamily = KernelFamily.POWER_LAW
    beta_kernel: float = Field(default=0.0, ge=0.0, alias="beta")

    @field_validator("beta_kernel")
    @classmethod
    def _finite_beta(cls, value: float) -> float:
        return _require_finite(value, "kernel.beta")

    def describe(self) -> str:  # pragma: no cover - string formatting helper
        return f"{self.family.value}(beta={self.beta_kernel:g})"


class RandomBox(BaseModel):
    """Positions drawn uniformly from the box [lo, hi]^d."""

    random_box: tuple[float, float] = (-1.0, 1.0)

    @field_validator("random_box")
    @classmethod
    def _ordered(cls, value: tuple[float, float]) -> tuple[float, float]:
        lo, hi = value
        _require_finite(lo, "random_box.lo")
        _require_finite(hi, "random_box.hi")
        if lo > hi:
            raise ValueError(f"random_box requires lo <= hi, got [{lo}, {hi}]")
        return value


class RandomBall(BaseModel):
    """Velocities drawn uniformly from the ball of radius r."""

    random_ball: float = Field(default=1.0, ge=0.0)

    @field_validator("random_ball")
    @classmethod
    def _finite_radius(cls, value: float) -> float:
        return _require_finite(value, "random_ball")


class InitialConfig(BaseModel):
    """Initial positions and velocities at t = 0."""

    positions: list[list[float]] | RandomBox = Field(default_factory=RandomBox)
    velocities: list[list[float]] | RandomBall = Field(default_factory=RandomBall)


class SampledKnots(BaseModel):
    """User-provided history knots on [-tau, 0], shaped (M, N, d)."""

    times: list[float]
    positions: list[list[list[float]]]
    velocities: list[list[list[float]]]
    accelerations: list[list[list[float]]] | None = None

    @field_validator("times")
    @classmethod
    def _increasing(cls, value: list[float]) -> list[float]:
        if len(value) < 2:
            raise ValueError("sampled history needs at least two knot times")
        if any(not math.isfinite(t) for t in value):
            raise ValueError("sampled history times must be finite")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("sampled history times must be strictly increasing")
        if value[-1] != 0.0:
            raise ValueError(f"sampled history must end at s = 0, got {value[-1]}")
        return value


class SampledHistoryConfig(BaseModel):
    sampled: SampledKnots


class ConstantDelays(BaseModel):
    constant: float = Field(ge=0.0)

    @property
    def kind(self) -> DelayKind:
        return DelayKind.CONSTANT


class UniformDelays(BaseModel):
    uniform: tuple[float, float]

    @field_validator("uniform")
    @classmethod
    def _ordered(cls, value: tuple[float, float]) -> tuple[float, float]:
        lo, hi = value
        _require_finite(lo, "uniform.lo")
        _require_finite(hi, "uniform.hi")
        if lo < 0 or lo > hi:
            raise ValueError(f"uniform delays require 0 <= lo <= hi, got [{lo}, {hi}]")
        return value

    @property
    def kind(self) -> DelayKind:
        return DelayKind.UNIFORM


class ExplicitDelays(BaseModel):
    matrix: list[list[float]]

    @property
    def kind(self) -> DelayKind:
        return DelayKind.MATRIX


DelayConfig = ConstantDelays | UniformDelays | ExplicitDelays
HistoryConfig = Literal["ballistic"] | SampledHistoryConfig


class ScenarioConfig(BaseModel):
    """Agents, kernel, delays and initial history of one simulation."""

    n_agents: int = Field(ge=2)
    dimension: int = Field(default=2, ge=1)
    seed: int = Field(default=0, ge=0, le=U64_MAX)
    kernel: KernelSpec = Field(default_factory=KernelSpec)
    initial: InitialConfig = Field(default_factory=InitialConfig)
    history: HistoryConfig = "ballistic"
    delays: DelayConfig = Field(default_factory=lambda: ConstantDelays(constant=0.05))
    reference_mode: bool = False

    @property
    def history_kind(self) -> HistoryKind:
        return HistoryKind.BALLISTIC if self.history == "ballistic" else HistoryKind.SAMPLED

    @model_validator(mode="after")
    def _check_shapes(self) -> ScenarioConfig:
        n, d = self.n_agents, self.dimension
        for name in ("positions", "velocities"):
            value = getattr(self.initial, name)
            if isinstance(value, list):
                if len(value) != n or any(len(row) != d for row in value):
                    raise ValueError(f"initial.{name} must have shape ({n}, {d})")
                if any(not math.isfinite(c) for row in value for c in row):
                    raise ValueError(f"initial.{name} must be finite")

        if isinstance(self.history, SampledHistoryConfig):
            knots = self.history.sampled
            m = len(knots.times)
            arrays = {"positions": knots.positions, "velocities": knots.velocities}
            if knots.accelerations is not None:
                arrays["accelerations"] = knots.accelerations
            for name, value in arrays.items():
                if len(value) != m or any(
                    len(agents) != n or any(len(vec) != d for vec in agents) for agents in value
                ):
                    raise ValueError(f"history.sampled.{name} must have shape ({m}, {n}, {d})")

        self._check_delays()
        return self

    def _check_delays(self) -> None:
        strict = not self.reference_mode
        delays = self.delays
        if isinstance(delays, ConstantDelays):
            if strict and delays.constant <= 0:
                raise ValueError(
                    "delays.constant must be > 0 (set reference_mode to allow zero delays)"
                )
        elif isinstance(delays, UniformDelays):
            if strict and delays.uniform[0] <= 0:
                raise ValueError(
                    "delays.uniform lower bound must be > 0 (set reference_mode to allow zero)"
                )
        else:
            matrix = delays.matrix
            n = self.n_agents
            if len(matrix) != n or any(len(row) != n for row in matrix):
                raise ValueError(f"delays.matrix must have shape ({n}, {n})")
            for i in range(n):
                for j in range(n):
                    value = matrix[i][j]
                    if not math.isfinite(value) or value < 0:
                        raise ValueError(f"delays.matrix[{i}][{j}] must be finite and >= 0")
                    if matrix[j][i] != value:
                        raise ValueError(f"delays.matrix is not symmetric at ({i}, {j})")
                    if strict and i != j and value <= 0:
                        raise ValueError(
                            f"delays.matrix[{i}][{j}] must be > 0 outside reference_mode"
                        )

    def describe(self) -> str:  # pragma: no cover - string formatting helper
        return (
            f"Scenario(N={self.n_agents}, d={self.dimension}, seed={self.seed}, "
            f"kernel={self.kernel.describe()}, delays={self.delays.kind.value}, "
            f"history={self.history_kind.value}, reference_mode={self.reference_mode})"
        )


class IntegratorConfig(BaseModel):
    """Fixed-step RK4 settings."""

    dt: float = Field(gt=0.0)
    t_end: float = Field(gt=0.0)
    output_stride: int = Field(default=1, ge=1)
    record_states: bool = False

    @model_validator(mode="after")
    def _end_after_first_step(self) -> IntegratorConfig:
        _require_finite(self.dt, "integrator.dt")
        _require_finite(self.t_end, "integrator.t_end")
        if self.t_end < self.dt:
            raise ValueError(f"integrator.t_end ({self.t_end}) must be >= dt ({self.dt})")
        return self

    @property
    def n_steps(self) -> int:
        # Tolerate t_end / dt landing a rounding error below an integer.
        return int(math.floor(self.t_end / self.dt + 1e-9))


class CertificateConfig(BaseModel):
    """Inputs for the flocking certificate; missing data is read off the scenario."""

    tau0: float | None = Field(default=None, gt=0.0)
    alpha: float | Literal["auto"] = "auto"
    d_X0: float | None = Field(default=None, ge=0.0)
    d_V0: float | None = Field(default=None, ge=0.0)
    R_v_tau: float | None = Field(default=None, ge=0.0)
    alpha_grid_span: tuple[float, float] = (1e-3, 1e3)
    alpha_grid_points: int = Field(default=121, ge=3)

    @field_validator("alpha")
    @classmethod
    def _positive_alpha(cls, value: float | str) -> float | str:
        if isinstance(value, float) and not (math.isfinite(value) and value > 0):
            raise ValueError(f"certificate.alpha must be positive and finite, got {value}")
        return value

    @field_validator("alpha_grid_span")
    @classmethod
    def _span(cls, value: tuple[float, float]) -> tuple[float, float]:
        lo, hi = value
        if not (0 < lo < hi and math.isfinite(hi)):
            raise ValueError(f"alpha_grid_span must satisfy 0 < lo < hi, got {value}")
        return value


class AnalysisConfig(BaseModel):
    """Post-processing settings: decay fit window and which checks to run."""

    fit_t_start: float | None = Field(default=None, ge=0.0)
    checks: list[str] | None = None
    flock_ratio: float = Field(default=1e-2, gt=0.0, lt=1.0)


class RunConfig(BaseModel):
    """Top-level configuration: scenario + integrator + optional certificate."""

    scenario: ScenarioConfig
    integrator: IntegratorConfig = Field(
        default_factory=lambda: IntegratorConfig(dt=1e-2, t_end=10.0)
    )
    certificate: CertificateConfig | None = None
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)

    @model_validator(mode="before")
    @classmethod
    def _lift_flat_scenario(cls, value: Any) -> Any:
        if isinstance(value, dict) and "scenario" not in value:
            flat = {key: value[key] for key in value if key in _SCENARIO_KEYS}
            if flat:
                rest = {key: item for key, item in value.items() if key not in _SCENARIO_KEYS}
                return {**rest, "scenario": flat}
        return value

    def with_seed(self, seed: int) -> RunConfig:
        payload = {**self.scenario.model_dump(by_alias=True), "seed": seed}
        return self.model_copy(update={"scenario": ScenarioConfig.model_validate(payload)})

    def describe(self) -> str:  # pragma: no cover - string formatting helper
        return (
            f"Run({self.scenario.describe()}, dt={self.integrator.dt:g}, "
            f"t_end={self.integrator.t_end:g}, certificate={self.certificate is not None})"
        )


class RunManifest(BaseModel):
    """Snapshot that reproduces one run bit-identically."""

    manifest_version: int = 1
    tool_version: str
    rng_algorithm: str
    numpy_version: str
    seed: int = Field(ge=0, le=U64_MAX)
    config: RunConfig
    outputs: dict[str, str] = Field(default_factory=dict)
