"""Run registered invariant checks with per-check error isolation."""

from __future__ import annotations

import traceback
from collections.abc import Iterable

from ..checks import CheckContext, load_checks
from ..logger import get_logger
from ..models import CheckReport

logger = get_logger(__name__)


class CheckService:
    """Execute a list of checks against one run and collect their reports."""

    def __init__(self, names: Iterable[str] | None = None) -> None:
        self.checks = load_checks(names)
        self.explicit = names is not None

    def run(self, context: CheckContext) -> dict[str, CheckReport]:
        reports: dict[str, CheckReport] = {}
        for check in self.checks:
            if not check.applies(context):
                if self.explicit:
                    reports[check.name] = CheckReport(
                        name=check.name,
                        passed=True,
                        applicable=False,
                        details={"skipped": "context lacks the inputs this check needs"},
                    )
                logger.debug(f"Skipping check {check.name}")
                continue
            try:
                report = check.run(context)
            except Exception as exc:
                logger.error(f"Check '{check.name}' failed: {exc}")
                logger.debug(f"Full traceback for {check.name}: {traceback.format_exc()}")
                report = CheckReport(
                    name=check.name,
                    passed=False,
                    error=f"{type(exc).__name__}: {exc}",
                )
            reports[check.name] = report
            self._log_report(report)

        failed = [name for name, report in reports.items() if not report.passed and report.applicable]
        logger.info(f"Checks completed: {len(reports) - len(failed)}/{len(reports)} passed")
        return reports

    @staticmethod
    def _log_report(report: CheckReport) -> None:
        if report.error:
            return
        margin = "n/a" if report.worst_margin is None else f"{report.worst_margin:.3g}"
        if report.passed:
            logger.debug(f"{report.name}: passed (worst margin {margin}, flagged {report.flagged})")
        elif not report.applicable:
            logger.info(f"{report.name}: violated outside the certified delay range")
        else:
            logger.warning(
                f"{report.name}: {report.n_violations} violation(s), worst margin {margin} "
                f"at t={report.worst_time}"
            )
