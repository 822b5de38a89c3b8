"""Utilities for loading run configuration files."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from ..errors import ConfigurationError
from ..logger import get_logger
from ..models import RunConfig, RunManifest

log = get_logger(__name__)


def format_validation_error(error: ValidationError) -> str:
    """One line per failing field, e.g. ``scenario.n_agents: Input should be >= 2``."""
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{location}: {item['msg']}")
    return "; ".join(lines)


class ConfigLoader:
    """Load ``RunConfig`` instances from YAML or JSON files (or run manifests)."""

    @staticmethod
    def read_payload(path: str | Path) -> dict[str, Any]:
        path = Path(path)
        try:
            with path.open("r", encoding="utf-8") as handle:
                payload = yaml.safe_load(handle)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}")
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"config {path} is not valid YAML/JSON: {exc}")
        if not isinstance(payload, dict):
            raise ConfigurationError(f"config {path} must contain a mapping at top level")
        return payload

    @staticmethod
    def is_manifest(payload: dict[str, Any]) -> bool:
        return "manifest_version" in payload and "config" in payload

    @classmethod
    def load_manifest(cls, path: str | Path) -> RunManifest:
        payload = cls.read_payload(path)
        try:
            return RunManifest.model_validate(payload)
        except ValidationError as exc:
            raise ConfigurationError(f"invalid manifest {path}: {format_validation_error(exc)}")

    @classmethod
    def load_config(cls, path: str | Path) -> RunConfig:
        path = Path(path)
        log.debug(f"Loading run configuration from {path}")
        payload = cls.read_payload(path)
        if cls.is_manifest(payload):
            log.debug("Configuration file is a run manifest; using its config snapshot")
            return cls.load_manifest(path).config
        try:
            config = RunConfig.model_validate(payload)
        except ValidationError as exc:
            raise ConfigurationError(f"invalid config {path}: {format_validation_error(exc)}")
        log.debug(f"Parsed configuration: {config.describe()}")
        return config

    @staticmethod
    def dump_config(config: RunConfig) -> dict[str, Any]:
        """JSON-ready payload that :meth:`load_config` parses back to an equal config."""
        return config.model_dump(mode="json", by_alias=True)
