"""Invariant checks run after every simulation."""

# Import built-in checks so they register themselves.
from . import builtin  # noqa: F401
from .base import BaseCheck, CheckContext
from .registry import load_checks, register_check, registry

__all__ = [
    "BaseCheck",
    "CheckContext",
    "load_checks",
    "register_check",
    "registry",
]
