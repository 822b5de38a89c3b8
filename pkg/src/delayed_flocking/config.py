"""Environment-driven runtime settings."""

from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError

_TRUE_VALUES = {"1", "true", "yes", "on"}
_FALSE_VALUES = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class RuntimeSettings:
    """Settings sourced from environment variables."""

    artifact_root: Path
    workers: int = 1
    debug_checks: bool = True

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> RuntimeSettings:
        """Build settings from a mapping, validating each recognised key."""

        root = values.get("FLOCK_ARTIFACT_ROOT")
        artifact_root = Path(root).expanduser().resolve() if root else Path.cwd() / "runs"

        raw_workers = values.get("FLOCK_WORKERS", "1")
        try:
            workers = int(raw_workers)
        except ValueError:
            raise ConfigurationError(f"FLOCK_WORKERS must be an integer, got '{raw_workers}'")
        if workers < 1:
            raise ConfigurationError(f"FLOCK_WORKERS must be >= 1, got {workers}")

        raw_debug = values.get("FLOCK_DEBUG_CHECKS", "1").strip().lower()
        if raw_debug in _TRUE_VALUES:
            debug_checks = True
        elif raw_debug in _FALSE_VALUES:
            debug_checks = False
        else:
            raise ConfigurationError(
                f"FLOCK_DEBUG_CHECKS must be a boolean flag, got '{raw_debug}'"
            )

        return cls(artifact_root=artifact_root, workers=workers, debug_checks=debug_checks)

    @classmethod
    def from_env(cls) -> RuntimeSettings:
        """Load settings from ``os.environ``."""

        return cls.from_mapping(os.environ)
