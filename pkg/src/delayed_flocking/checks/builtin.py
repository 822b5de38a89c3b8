"""Built-in invariant checks over simulated runs."""

from __future__ import annotations

from ..diagnostics import checks as diag
from ..models import CheckReport
from .base import BaseCheck, CheckContext
from .registry import register_check


@register_check("velocity_bound")
class VelocityBoundCheck(BaseCheck):
    def run(self, context: CheckContext) -> CheckReport:
        return diag.check_velocity_bound(context.series, context.R_v_tau)


@register_check("delta_small_time")
class DeltaSmallTimeCheck(BaseCheck):
    def run(self, context: CheckContext) -> CheckReport:
        return diag.check_delta_small_time(context.series, context.R_v_tau, context.tau_max)


@register_check("dissipative_inequalities")
class DissipativeInequalitiesCheck(BaseCheck):
    """Needs uniformly spaced records."""

    def applies(self, context: CheckContext) -> bool:
        return len(context.series) >= 2 and context.spacing > 0

    def run(self, context: CheckContext) -> CheckReport:
        return diag.check_dissipative_inequalities(
            context.series,
            context.tau_max,
            context.spacing,
            kernel=context.kernel,
            R_v_tau=context.R_v_tau if context.kernel is not None else None,
        )


@register_check("delta_integral_bound")
class DeltaIntegralBoundCheck(BaseCheck):
    """Only meaningful when records resolve the delay window."""

    def applies(self, context: CheckContext) -> bool:
        if len(context.series) < 2 or context.tau_max <= 0:
            return False
        return context.spacing <= context.tau_max and context.series.times[-1] >= context.tau_max

    def run(self, context: CheckContext) -> CheckReport:
        return diag.check_delta_integral_bound(context.series, context.tau_max, context.n_agents)


@register_check("acceleration_bound")
class AccelerationBoundCheck(BaseCheck):
    def applies(self, context: CheckContext) -> bool:
        return context.max_acceleration is not None

    def run(self, context: CheckContext) -> CheckReport:
        assert context.max_acceleration is not None
        return diag.check_acceleration_bound(context.max_acceleration, context.R_v_tau)


@register_check("certificate_envelope")
class CertificateEnvelopeCheck(BaseCheck):
    def applies(self, context: CheckContext) -> bool:
        return context.certificate is not None

    def run(self, context: CheckContext) -> CheckReport:
        assert context.certificate is not None
        return diag.check_certificate_envelope(
            context.series, context.certificate, context.tau_max
        )
