"""Enumerations naming the built-in kernel, history and delay families."""

from __future__ import annotations

from enum import Enum


class KernelFamily(str, Enum):
    """Communication weight families."""

    POWER_LAW = "power_law"


class HistoryKind(str, Enum):
    """How the pre-simulation trajectory on [-tau, 0] is prescribed."""

    BALLISTIC = "ballistic"
    SAMPLED = "sampled"


class DelayKind(str, Enum):
    """How the pairwise delay matrix is generated."""

    CONSTANT = "constant"
    UNIFORM = "uniform"
    MATRIX = "matrix"
