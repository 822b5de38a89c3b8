"""Core orchestration: simulate, certify, sweep and fit end to end."""

from __future__ import annotations

import bisect
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from . import __version__
from .certificate import build_certificate, default_tau0
from .checks import CheckContext
from .config import RuntimeSettings
from .constants import RNG_ALGORITHM
from .diagnostics.checks import check_certificate_envelope
from .diagnostics.fit import fit_decay_rate, fit_log_linear
from .diagnostics.functionals import diameters
from .diagnostics.series import DiagnosticsSeries, SeriesMetadata
from .dynamics.rhs import initial_history_max_speed
from .dynamics.scenario import Scenario, build_scenario
from .errors import InsufficientDataError, NotCertifiableError, UsageError
from .integrator import SimulationResult, simulate
from .logger import get_logger
from .models import (
    CertificateConfig,
    CheckReport,
    DecayFit,
    FlockingCertificate,
    RunConfig,
    RunManifest,
    SweepRow,
)
from .services.artifact_service import ArtifactService, build_summary, read_run_metadata
from .services.check_service import CheckService

log = get_logger(__name__)

# Tolerance for comparing a fitted rate against the certified rate.
FIT_RATE_TOL = 1e-3


@dataclass(eq=False)
class RunOutcome:
    result: SimulationResult
    fit: DecayFit | None
    reports: dict[str, CheckReport]
    certificate: FlockingCertificate | None = None
    output_dir: Path | None = None


@dataclass(eq=False)
class SweepOutcome:
    rows: list[SweepRow]
    summary: dict[str, Any]
    certificate: FlockingCertificate | None = None

    @property
    def certified_envelope_violations(self) -> list[SweepRow]:
        return [row for row in self.rows if row.certified and row.envelope_violated]


@dataclass(frozen=True)
class FitOutcome:
    fit: DecayFit
    certified_rate: float | None = None
    consistent: bool | None = None
    details: dict[str, Any] = field(default_factory=dict)


def certify_scenario(
    scenario: Scenario, config: CertificateConfig, tau0: float | None = None
) -> FlockingCertificate:
    """Certificate for the scenario's initial data; config overrides win over measured values."""
    d_x, d_v = diameters(scenario.initial_state)
    d_X0 = d_x if config.d_X0 is None else config.d_X0
    d_V0 = d_v if config.d_V0 is None else config.d_V0
    if config.R_v_tau is None:
        R_v_tau = initial_history_max_speed(scenario.history)
        source = "initial_history_max_speed"
    else:
        R_v_tau = config.R_v_tau
        source = "config"
    if tau0 is None:
        tau0 = config.tau0 if config.tau0 is not None else default_tau0(scenario.delays.tau_max)
    return build_certificate(
        d_V0,
        d_X0,
        R_v_tau,
        scenario.initial_state.n_agents,
        scenario.kernel,
        tau0,
        config.alpha,
        span=config.alpha_grid_span,
        points=config.alpha_grid_points,
        R_v_source=source,
    )


def safe_fit(series: DiagnosticsSeries, t_start: float | None) -> DecayFit | None:
    try:
        return fit_decay_rate(series, t_start=t_start)
    except InsufficientDataError as exc:
        log.warning(f"No decay fit: {exc}")
        return None


def build_manifest(config: RunConfig) -> RunManifest:
    return RunManifest(
        tool_version=__version__,
        rng_algorithm=RNG_ALGORITHM,
        numpy_version=np.__version__,
        seed=config.scenario.seed,
        config=config,
    )


def execute_run(
    config: RunConfig,
    scenario: Scenario,
    output_dir: Path | None,
    *,
    certificate: FlockingCertificate | None = None,
    debug_checks: bool = True,
) -> RunOutcome:
    """Simulate, fit, check and (optionally) write every artifact of one run."""
    result = simulate(scenario, config.integrator, certificate=certificate, debug_checks=debug_checks)
    fit = safe_fit(result.series, config.analysis.fit_t_start)
    context = CheckContext.from_series(
        result.series,
        kernel=scenario.kernel,
        certificate=certificate,
        max_acceleration=result.max_acceleration,
    )
    reports = CheckService(config.analysis.checks).run(context)

    if output_dir is not None:
        artifacts = ArtifactService(output_dir)
        artifacts.write_diagnostics(result.series)
        if result.states:
            artifacts.write_trajectory(result.states)
        artifacts.write_checks(reports)
        if certificate is not None:
            artifacts.write_certificate(certificate)
        artifacts.write_summary(
            build_summary(
                result.series,
                tau_min=scenario.delays.tau_min,
                fit=fit,
                checks=reports,
                certificate=certificate,
            )
        )
        artifacts.write_manifest(build_manifest(config))
    return RunOutcome(
        result=result, fit=fit, reports=reports, certificate=certificate, output_dir=output_dir
    )


def _sweep_run_config(config: RunConfig, scenario: Scenario, dt: float) -> RunConfig:
    """Snapshot of one sweep run with its rescaled delays written out explicitly."""
    payload = config.model_dump(mode="json", by_alias=True)
    payload["scenario"]["delays"] = {"matrix": scenario.delays.entries.tolist()}
    payload["integrator"]["dt"] = dt
    return RunConfig.model_validate(payload)


def _sweep_worker(
    payload: dict[str, Any],
    tau: float,
    index: int,
    output_root: str | None,
    certificate_payload: dict[str, Any] | None,
    debug_checks: bool,
) -> dict[str, Any]:
    """Run one swept delay magnitude; top-level so it pickles for worker processes."""
    config = RunConfig.model_validate(payload)
    base = build_scenario(config.scenario)
    scenario = base.with_delays(base.delays.rescaled(tau))
    tau_min = scenario.delays.positive_tau_min or 0.0
    dt = config.integrator.dt
    if tau_min > 0 and dt > tau_min:
        log.warning(f"tau={tau:g}: reducing dt from {dt:g} to tau_min={tau_min:g}")
        dt = tau_min
    run_config = _sweep_run_config(config, scenario, dt)
    certificate = (
        None if certificate_payload is None else FlockingCertificate(**certificate_payload)
    )
    output_dir = None if output_root is None else Path(output_root) / f"run_{index}"
    outcome = execute_run(
        run_config,
        scenario,
        output_dir,
        certificate=certificate,
        debug_checks=debug_checks,
    )

    series = outcome.result.series
    first, last = series[0], series[-1]
    flocked = first.d_V == 0.0 or last.d_V <= config.analysis.flock_ratio * first.d_V
    envelope_violated: bool | None = None
    certified = False
    if certificate is not None:
        certified = tau <= certificate.tau_bar
        envelope = check_certificate_envelope(series, certificate, scenario.delays.tau_max)
        envelope_violated = not envelope.passed
    row = SweepRow(
        tau=tau,
        tau_min=tau_min,
        dt=dt,
        final_d_V=last.d_V,
        fitted_rate=None if outcome.fit is None else outcome.fit.rate,
        flocked=flocked,
        certified=certified,
        envelope_violated=envelope_violated,
    )
    log.info(
        f"tau={tau:g}: final d_V={last.d_V:.3e}, flocked={flocked}, certified={certified}"
    )
    return row.model_dump()


def sweep_summary(
    rows: Sequence[SweepRow], certificate: FlockingCertificate | None
) -> dict[str, Any]:
    """tau_bar, its position among the swept taus and the empirical flocking threshold."""
    taus = [row.tau for row in rows]
    tau_bar = None if certificate is None else certificate.tau_bar
    not_flocked = [row.tau for row in rows if not row.flocked]
    inconsistent = [row.tau for row in rows if row.certified and (not row.flocked or row.envelope_violated)]
    return {
        "tau_bar": tau_bar,
        "index": None if tau_bar is None else bisect.bisect_right(taus, tau_bar),
        "observed_threshold": min(not_flocked) if not_flocked else None,
        "theory_consistent": not inconsistent,
        "inconsistent_taus": inconsistent,
        "n_runs": len(rows),
    }


def parse_taus(values: Sequence[float]) -> list[float]:
    """Validate a sweep list: non-empty, finite, positive and strictly increasing."""
    taus = [float(value) for value in values]
    if not taus:
        raise UsageError("the tau list is empty")
    if any(not np.isfinite(tau) or tau <= 0 for tau in taus):
        raise UsageError(f"swept taus must be positive and finite, got {taus}")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise UsageError(f"swept taus must be strictly increasing, got {taus}")
    return taus


class Orchestrator:
    """Run the simulate, certify, sweep and fit workflows."""

    def __init__(self, settings: RuntimeSettings | None = None) -> None:
        self.settings = settings or RuntimeSettings.from_env()

    def simulate(self, config: RunConfig, output_dir: Path | None = None) -> RunOutcome:
        log.banner("Simulation")
        log.info(f"🔧 Configuration: {config.describe()}")
        scenario = build_scenario(config.scenario)
        certificate = None
        if config.certificate is not None:
            try:
                certificate = certify_scenario(scenario, config.certificate)
                log.info(f"📜 Attached {certificate.describe()}")
            except NotCertifiableError as exc:
                log.warning(f"No certificate attached: {exc}")
        outcome = execute_run(
            config,
            scenario,
            output_dir,
            certificate=certificate,
            debug_checks=self.settings.debug_checks,
        )
        if output_dir is not None:
            log.success(f"✅ Artifacts written to {output_dir}")
        return outcome

    def certify(self, config: RunConfig, output_dir: Path | None = None) -> FlockingCertificate:
        """Raises NotCertifiableError when the condition fails on the searched grid."""
        log.banner("Certificate")
        scenario = build_scenario(config.scenario)
        certificate = certify_scenario(scenario, config.certificate or CertificateConfig())
        if output_dir is not None:
            artifacts = ArtifactService(output_dir)
            artifacts.write_certificate(certificate)
            artifacts.write_manifest(build_manifest(config))
        log.success(f"✅ {certificate.describe()}")
        return certificate

    def sweep(
        self,
        config: RunConfig,
        taus: Sequence[float],
        output_dir: Path | None = None,
        workers: int | None = None,
    ) -> SweepOutcome:
        """Rescale the base delay matrix to each tau_max in ``taus`` and simulate."""
        log.banner("Delay sweep")
        taus = parse_taus(taus)
        workers = workers or self.settings.workers
        base = build_scenario(config.scenario)
        if base.delays.tau_max <= 0:
            raise UsageError("cannot sweep a scenario whose delays are all zero")

        certificate: FlockingCertificate | None = None
        cert_config = config.certificate or CertificateConfig()
        tau0 = cert_config.tau0 if cert_config.tau0 is not None else default_tau0(taus[-1])
        try:
            certificate = certify_scenario(base, cert_config, tau0=tau0)
            log.info(f"📜 tau_bar={certificate.tau_bar:.6g}")
        except NotCertifiableError as exc:
            log.warning(f"Sweep runs uncertified: {exc}")

        if certificate is not None:
            # Pin the resolved certificate inputs so per-run manifests reproduce it.
            pinned = CertificateConfig(
                **{
                    **cert_config.model_dump(),
                    "tau0": certificate.tau0,
                    "alpha": certificate.alpha,
                }
            )
            config = config.model_copy(update={"certificate": pinned})

        payload = config.model_dump(mode="json", by_alias=True)
        cert_payload = None if certificate is None else certificate.model_dump()
        root = None if output_dir is None else str(output_dir)
        arguments = [
            (payload, tau, index, root, cert_payload, self.settings.debug_checks)
            for index, tau in enumerate(taus)
        ]
        if workers > 1 and len(taus) > 1:
            log.info(f"Running {len(taus)} sweep runs on {workers} worker processes")
            with ProcessPoolExecutor(max_workers=workers) as pool:
                dumped = list(pool.map(_sweep_worker, *zip(*arguments)))
        else:
            dumped = [_sweep_worker(*args) for args in arguments]

        rows = [SweepRow(**row) for row in dumped]
        summary = sweep_summary(rows, certificate)
        if output_dir is not None:
            ArtifactService(output_dir).write_sweep(rows, summary)
        if summary["theory_consistent"]:
            log.success("✅ Sweep consistent with the certified delay bound")
        else:
            log.warning(f"Certified runs misbehaved at tau={summary['inconsistent_taus']}")
        return SweepOutcome(rows=rows, summary=summary, certificate=certificate)

    def fit(
        self, csv_path: Path, t_start: float | None = None, tau: float | None = None
    ) -> FitOutcome:
        """Fit the d_V decay of a diagnostics CSV and compare with its envelope column.

        Without ``t_start`` the window opens at 5 tau_max, as for a fresh run.
        tau_max is ``tau`` when given, else read from the summary JSON written
        next to the CSV; with neither the window starts at 0.
        """
        metadata = read_run_metadata(csv_path) if tau is None else SeriesMetadata(tau_max=tau)
        try:
            series = DiagnosticsSeries.read_csv(csv_path, metadata=metadata)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as exc:
            raise UsageError(f"cannot read diagnostics CSV {csv_path}: {exc}")
        fit = fit_decay_rate(series, t_start=t_start)
        log.info(f"📉 C={fit.amplitude:.6g}, rate={fit.rate:.6g} (rms {fit.rms_residual:.2e})")
        if not series.has_envelope:
            return FitOutcome(fit=fit)

        envelope = series.column("envelope_dV")
        usable = ~np.isnan(envelope)
        certified = fit_log_linear(series.times[usable], envelope[usable]).rate
        consistent = fit.rate >= certified - FIT_RATE_TOL
        if consistent:
            log.success(f"✅ Fitted rate {fit.rate:.6g} >= certified rate {certified:.6g}")
        else:
            log.warning(f"Fitted rate {fit.rate:.6g} below certified rate {certified:.6g}")
        return FitOutcome(
            fit=fit,
            certified_rate=certified,
            consistent=consistent,
            details={"tolerance": FIT_RATE_TOL},
        )
