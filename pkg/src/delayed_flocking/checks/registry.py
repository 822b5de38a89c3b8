"""Check registry and helper utilities."""

from __future__ import annotations

from collections.abc import Callable, Iterable

from ..errors import ConfigurationError
from .base import BaseCheck


class CheckRegistry:
    """Simple name-based registry for check implementations."""

    def __init__(self) -> None:
        self._registry: dict[str, type[BaseCheck]] = {}

    def register(self, name: str, check: type[BaseCheck]) -> None:
        check.name = name.lower()
        self._registry[name.lower()] = check

    def decorator(self, name: str | None = None) -> Callable[[type[BaseCheck]], type[BaseCheck]]:
        def _wrap(cls: type[BaseCheck]) -> type[BaseCheck]:
            key = name or cls.__name__
            self.register(key, cls)
            return cls

        return _wrap

    def get(self, name: str) -> type[BaseCheck] | None:
        return self._registry.get(name.lower())

    def create(self, name: str) -> BaseCheck:
        impl = self.get(name)
        if impl is None:
            known = ", ".join(self.available())
            raise ConfigurationError(f"unknown check '{name}' (known: {known})")
        return impl()

    def available(self) -> list[str]:
        return list(self._registry.keys())


registry = CheckRegistry()


def load_checks(names: Iterable[str] | None = None) -> list[BaseCheck]:
    """Instantiate the named checks, or every registered check in registration order."""
    selected = registry.available() if names is None else list(names)
    return [registry.create(name) for name in selected]


register_check = registry.decorator


__all__ = [
    "CheckRegistry",
    "load_checks",
    "register_check",
    "registry",
]
