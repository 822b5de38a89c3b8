"""Delayed Cucker-Smale flocking: simulator, diagnostics and flocking certificates."""

from importlib import metadata


def _load_version() -> str:
    try:
        return metadata.version("delayed-flocking")
    except metadata.PackageNotFoundError:
        return "0.0.0"


__version__ = _load_version()

__all__ = ["__version__"]
