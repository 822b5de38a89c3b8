"""Pytest configuration for the end-to-end acceptance scenarios.

Run them with ``pytest -m integration``; add ``-m "integration and not slow"``
to skip the long seeded suites.
"""

from __future__ import annotations

import numpy as np
import pytest


def pytest_collection_modifyitems(config, items):
    """Auto-mark everything under tests/integration."""
    for item in items:
        if "integration" in str(item.fspath):
            item.add_marker(pytest.mark.integration)


@pytest.fixture
def suite_rng() -> np.random.Generator:
    """Fixed generator for drawing the seeded scenario suites."""
    return np.random.default_rng(20241018)
