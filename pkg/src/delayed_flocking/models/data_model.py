"""Result records: check reports, decay fits, certificates and sweep rows."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CheckReport(BaseModel):
    """Outcome of one invariant check over a diagnostics series."""

    name: str
    passed: bool
    n_records: int = 0
    n_violations: int = 0
    threshold: float | None = None
    tolerance: float | None = None
    worst_margin: float | None = None
    worst_time: float | None = None
    worst_index: int | None = None
    flagged: int = Field(
        default=0,
        description="Records whose violation is within tolerance and cannot be told apart "
        "from discretization error.",
    )
    applicable: bool = True
    error: str | None = None
    details: dict[str, Any] = Field(default_factory=dict)


class DecayFit(BaseModel):
    """Least-squares fit of log d_V(t) = log C - rate * t."""

    amplitude: float
    rate: float
    rms_residual: float
    n_points: int
    t_start: float
    t_end: float


class FlockingCertificate(BaseModel):
    """Constants realizing the sufficient flocking condition and its decay envelope."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0.0)
    tau0: float = Field(gt=0.0)
    R_v_tau: float = Field(ge=0.0)
    psi_inf: float = Field(gt=0.0, le=1.0)
    beta_proof: float = Field(gt=0.0)
    c: float = Field(gt=0.0, lt=1.0)
    tau_bar: float = Field(gt=0.0)
    C0: float = Field(gt=0.0)
    rate: float = Field(gt=0.0)
    d_X_bound: float = Field(gt=0.0)
    d_X0: float = Field(ge=0.0)
    d_V0: float = Field(ge=0.0)
    n_agents: int = Field(ge=2)
    beta_kernel: float = Field(ge=0.0)
    tau_a: float | None = None
    tau_b: float | None = None
    strengthened_step_b: Literal[True] = True
    R_v_source: str = "initial_history_max_speed"

    @model_validator(mode="after")
    def _check_invariants(self) -> FlockingCertificate:
        if not self.d_V0 < self.alpha * self.psi_inf:
            raise ValueError(
                f"flocking condition violated: d_V0={self.d_V0} >= alpha*psi_inf="
                f"{self.alpha * self.psi_inf}"
            )
        if not self.C0 / (self.c * self.psi_inf) < self.alpha:
            raise ValueError("strengthened position-bound closure violated: C0/(c*psi_inf) >= alpha")
        if not self.tau_bar < self.tau0:
            raise ValueError(f"tau_bar={self.tau_bar} must lie in (0, tau0={self.tau0})")
        if self.C0 < self.d_V0:
            raise ValueError(f"envelope amplitude C0={self.C0} below d_V0={self.d_V0}")
        return self

    @property
    def delta_amplitude(self) -> float:
        return self.beta_proof * self.psi_inf**2

    def describe(self) -> str:  # pragma: no cover - string formatting helper
        return (
            f"Certificate(alpha={self.alpha:.6g}, psi_inf={self.psi_inf:.6g}, "
            f"c={self.c:.6g}, tau_bar={self.tau_bar:.6g}, rate={self.rate:.6g})"
        )


class SweepRow(BaseModel):
    """One delay magnitude of a tau-sweep."""

    tau: float
    tau_min: float
    dt: float
    final_d_V: float
    fitted_rate: float | None = None
    flocked: bool
    certified: bool
    envelope_violated: bool | None = None
