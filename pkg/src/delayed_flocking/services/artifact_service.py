"""Write run artifacts: diagnostics and trajectory CSVs, summary/manifest/certificate JSON."""

from __future__ import annotations

import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..constants import (
    CERTIFICATE_FILENAME,
    CHECKS_FILENAME,
    DIAGNOSTICS_FILENAME,
    MANIFEST_FILENAME,
    SUMMARY_FILENAME,
    SWEEP_FILENAME,
    SWEEP_SUMMARY_FILENAME,
    TRAJECTORY_FILENAME,
)
from ..diagnostics.series import DiagnosticsSeries, SeriesMetadata
from ..dynamics.state import SystemState
from ..logger import get_logger
from ..models import CheckReport, DecayFit, FlockingCertificate, RunManifest, SweepRow
from ..utils import ensure_directory, write_json

logger = get_logger(__name__)

SWEEP_COLUMNS: tuple[str, ...] = (
    "tau",
    "tau_min",
    "dt",
    "final_d_V",
    "fitted_rate",
    "flocked",
    "certified",
    "envelope_violated",
)


def trajectory_frame(states: Sequence[SystemState]) -> pd.DataFrame:
    """Long-format table: one row per (t, agent) with x_0.. and v_0.. columns."""
    if not states:
        return pd.DataFrame(columns=["t", "agent"])
    n, d = states[0].positions.shape
    times = np.repeat([state.t for state in states], n)
    agents = np.tile(np.arange(n), len(states))
    positions = np.concatenate([state.positions for state in states])
    velocities = np.concatenate([state.velocities for state in states])
    frame = pd.DataFrame({"t": times, "agent": agents})
    for axis in range(d):
        frame[f"x_{axis}"] = positions[:, axis]
    for axis in range(d):
        frame[f"v_{axis}"] = velocities[:, axis]
    return frame


class ArtifactService:
    """Persist the outputs of one run (or one sweep) under ``output_dir``."""

    def __init__(self, output_dir: Path) -> None:
        self.output_dir = ensure_directory(Path(output_dir))
        self.written: dict[str, str] = {}

    def _path(self, key: str, filename: str) -> Path:
        path = self.output_dir / filename
        self.written[key] = filename
        return path

    def write_diagnostics(self, series: DiagnosticsSeries) -> Path:
        path = series.to_csv(self._path("diagnostics", DIAGNOSTICS_FILENAME))
        logger.debug(f"Diagnostics written to {path}")
        return path

    def write_trajectory(self, states: Sequence[SystemState]) -> Path:
        path = self._path("trajectory", TRAJECTORY_FILENAME)
        trajectory_frame(states).to_csv(path, index=False, lineterminator="\n")
        logger.debug(f"Trajectory written to {path}")
        return path

    def write_checks(self, reports: dict[str, CheckReport]) -> Path:
        payload = {name: report.model_dump() for name, report in reports.items()}
        return write_json(self._path("checks", CHECKS_FILENAME), payload)

    def write_certificate(self, certificate: FlockingCertificate) -> Path:
        return write_json(self._path("certificate", CERTIFICATE_FILENAME), certificate.model_dump())

    def write_summary(self, summary: dict[str, Any]) -> Path:
        return write_json(self._path("summary", SUMMARY_FILENAME), summary)

    def write_manifest(self, manifest: RunManifest) -> Path:
        # The manifest lists itself among the outputs.
        self.written["manifest"] = MANIFEST_FILENAME
        manifest = manifest.model_copy(update={"outputs": dict(self.written)})
        return write_json(
            self.output_dir / MANIFEST_FILENAME, manifest.model_dump(mode="json", by_alias=True)
        )

    def write_sweep(self, rows: Sequence[SweepRow], summary: dict[str, Any]) -> tuple[Path, Path]:
        frame = pd.DataFrame([row.model_dump() for row in rows], columns=list(SWEEP_COLUMNS))
        csv_path = self._path("sweep", SWEEP_FILENAME)
        frame.to_csv(csv_path, index=False, na_rep="", lineterminator="\n")
        json_path = write_json(self._path("sweep_summary", SWEEP_SUMMARY_FILENAME), summary)
        return csv_path, json_path


def build_summary(
    series: DiagnosticsSeries,
    *,
    tau_min: float,
    fit: DecayFit | None,
    checks: dict[str, CheckReport],
    certificate: FlockingCertificate | None,
) -> dict[str, Any]:
    """Summary JSON payload for one run."""
    first, last = series[0], series[-1]
    meta = series.metadata
    return {
        "final": {"t": last.t, "d_X": last.d_X, "d_V": last.d_V, "R_v": last.R_v},
        "initial": {
            "d_X": first.d_X,
            "d_V": first.d_V,
            "R_v_tau": meta.R_v_tau,
            "tau_max": meta.tau_max,
            "tau_min": tau_min,
        },
        "fit": None
        if fit is None
        else {
            "amplitude": fit.amplitude,
            "rate": fit.rate,
            "rms_residual": fit.rms_residual,
            "n_points": fit.n_points,
            "t_start": fit.t_start,
        },
        "checks": {name: report.model_dump() for name, report in checks.items()},
        "certificate": None if certificate is None else certificate.model_dump(),
        "reference_mode": meta.reference_mode,
    }


def read_run_metadata(csv_path: Path) -> SeriesMetadata:
    """Run constants from the summary JSON next to a diagnostics CSV; empty when there is none."""
    path = Path(csv_path).with_name(SUMMARY_FILENAME)
    if not path.is_file():
        return SeriesMetadata()
    try:
        initial = json.loads(path.read_text(encoding="utf-8"))["initial"]
        return SeriesMetadata(tau_max=float(initial["tau_max"]))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        logger.warning(f"Ignoring unreadable run summary {path}: {exc}")
        return SeriesMetadata()
