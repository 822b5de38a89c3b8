"""Base check interface and the context a check runs against."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

from ..diagnostics.series import DiagnosticsSeries
from ..errors import UsageError
from ..models import CheckReport, FlockingCertificate, KernelSpec


@dataclass(frozen=True)
class CheckContext:
    """A completed run as seen by the invariant checks."""

    series: DiagnosticsSeries
    R_v_tau: float
    tau_max: float
    spacing: float
    n_agents: int
    kernel: KernelSpec | None = None
    certificate: FlockingCertificate | None = None
    max_acceleration: float | None = None

    @classmethod
    def from_series(
        cls,
        series: DiagnosticsSeries,
        *,
        kernel: KernelSpec | None = None,
        certificate: FlockingCertificate | None = None,
        max_acceleration: float | None = None,
    ) -> CheckContext:
        meta = series.metadata
        if meta.R_v_tau is None or meta.tau_max is None or meta.n_agents is None:
            raise UsageError("series metadata lacks R_v_tau, tau_max or n_agents")
        spacing = meta.spacing
        if spacing is None:
            t = series.times
            spacing = float(t[1] - t[0]) if t.size > 1 else 0.0
        return cls(
            series=series,
            R_v_tau=meta.R_v_tau,
            tau_max=meta.tau_max,
            spacing=spacing,
            n_agents=meta.n_agents,
            kernel=kernel,
            certificate=certificate,
            max_acceleration=max_acceleration,
        )


class BaseCheck(ABC):
    """A named invariant verified over a completed run."""

    name: str = ""

    def applies(self, context: CheckContext) -> bool:
        """Whether the context holds what this check needs."""
        return True

    @abstractmethod
    def run(self, context: CheckContext) -> CheckReport:
        """Verify the invariant and return its report."""
