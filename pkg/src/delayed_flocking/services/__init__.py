"""Services: configuration loading, invariant checks and artifact output."""

from .artifact_service import ArtifactService, build_summary, read_run_metadata, trajectory_frame
from .check_service import CheckService
from .config_loader import ConfigLoader, format_validation_error

__all__ = [
    "ArtifactService",
    "CheckService",
    "ConfigLoader",
    "build_summary",
    "format_validation_error",
    "read_run_metadata",
    "trajectory_frame",
]
