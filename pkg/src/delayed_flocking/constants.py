"""Shared filesystem locations, output formats and calibrated tolerances."""

from __future__ import annotations

import os
from pathlib import Path

PACKAGE_ROOT = Path(__file__).resolve().parent
PROJECT_ROOT = PACKAGE_ROOT.parent

DIAGNOSTICS_COLUMNS: tuple[str, ...] = (
    "t",
    "d_X",
    "d_V",
    "R_v",
    "delta_N_tau",
    "psi_floor",
    "envelope_dV",
    "residual_dV",
)

DIAGNOSTICS_FILENAME = "diagnostics.csv"
TRAJECTORY_FILENAME = "trajectory.csv"
SUMMARY_FILENAME = "summary.json"
MANIFEST_FILENAME = "manifest.json"
CHECKS_FILENAME = "checks.json"
CERTIFICATE_FILENAME = "certificate.json"
SWEEP_FILENAME = "sweep.csv"
SWEEP_SUMMARY_FILENAME = "sweep_summary.json"

RNG_ALGORITHM = "numpy.Philox4x64-10/SeedSequence.spawn"
MANIFEST_VERSION = 1

# Velocity bound slack for discretization.
VELOCITY_BOUND_TOL = 1e-8
# Forward-difference tolerance is DISSIPATIVE_C_DT * spacing + DISSIPATIVE_ABS_TOL.
DISSIPATIVE_C_DT = 10.0
DISSIPATIVE_ABS_TOL = 1e-6
FIT_MIN_DV = 1e-14
FIT_START_DELAYS = 5.0
ENVELOPE_RTOL = 1e-6
TAU_BAR_SHRINK = 1e-6
BISECTION_RTOL = 1e-12
DEFAULT_TAU0_FACTOR = 10.0
DEFAULT_FLOCK_RATIO = 1e-2


def _resolve_artifact_root() -> Path:
    env_value = os.getenv("FLOCK_ARTIFACT_ROOT")
    if env_value:
        return Path(env_value).expanduser().resolve()
    return Path.cwd() / "runs"


def refresh_paths() -> None:
    """Recompute filesystem roots from the current environment."""

    global ARTIFACT_ROOT
    ARTIFACT_ROOT = _resolve_artifact_root()


# Initialize module-level paths on import.
refresh_paths()

__all__ = [
    "PACKAGE_ROOT",
    "PROJECT_ROOT",
    "ARTIFACT_ROOT",
    "DIAGNOSTICS_COLUMNS",
    "RNG_ALGORITHM",
    "refresh_paths",
]
