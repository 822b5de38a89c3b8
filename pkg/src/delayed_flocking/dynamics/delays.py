"""Symmetric pairwise delay matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class DelayMatrix:
    """Delays tau_ji between agents; ``entries[j, i]`` is the lag with which i sees j.

    The diagonal is stored as 0 and never read. Off-diagonal entries must be
    strictly positive unless ``reference_mode`` is set.
    """

    entries: NDArray[np.float64] = field(repr=False)
    reference_mode: bool = False
    tau_min: float = field(init=False)
    tau_max: float = field(init=False)

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ConfigurationError(f"delay matrix must be square, got shape {entries.shape}")
        n = entries.shape[0]
        if n < 2:
            raise ConfigurationError("delay matrix needs at least two agents")
        if not np.all(np.isfinite(entries)):
            raise ConfigurationError("delay matrix entries must be finite")
        if not np.array_equal(entries, entries.T):
            raise ConfigurationError("delay matrix must be symmetric (tau_ji == tau_ij)")
        np.fill_diagonal(entries, 0.0)

        off_diagonal = entries[~np.eye(n, dtype=bool)]
        if np.any(off_diagonal < 0):
            raise ConfigurationError("delays must be nonnegative")
        if not self.reference_mode and np.any(off_diagonal <= 0):
            raise ConfigurationError(
                "off-diagonal delays must be strictly positive outside reference_mode"
            )

        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "tau_min", float(off_diagonal.min()))
        object.__setattr__(self, "tau_max", float(off_diagonal.max()))

    # Construction -------------------------------------------------------
    @classmethod
    def constant(cls, n_agents: int, tau: float, reference_mode: bool = False) -> DelayMatrix:
        entries = np.full((n_agents, n_agents), float(tau))
        return cls(entries=entries, reference_mode=reference_mode)

    @classmethod
    def uniform(
        cls,
        n_agents: int,
        lo: float,
        hi: float,
        rng: np.random.Generator,
        reference_mode: bool = False,
    ) -> DelayMatrix:
        """Draw the i < j entries from U[lo, hi] in row-major order and mirror them."""
        entries = np.zeros((n_agents, n_agents))
        upper_i, upper_j = np.triu_indices(n_agents, k=1)
        entries[upper_i, upper_j] = rng.uniform(lo, hi, size=upper_i.size)
        entries[upper_j, upper_i] = entries[upper_i, upper_j]
        return cls(entries=entries, reference_mode=reference_mode)

    @classmethod
    def from_matrix(cls, matrix: ArrayLike, reference_mode: bool = False) -> DelayMatrix:
        return cls(entries=np.asarray(matrix, dtype=float), reference_mode=reference_mode)

    def rescaled(self, tau_max: float) -> DelayMatrix:
        """Scale every entry so the largest delay equals ``tau_max``."""
        if self.tau_max <= 0:
            raise ConfigurationError("cannot rescale an all-zero delay matrix")
        if tau_max <= 0 and not self.reference_mode:
            raise ConfigurationError(f"rescaled tau_max must be > 0, got {tau_max}")
        return DelayMatrix(
            entries=self.entries * (tau_max / self.tau_max), reference_mode=self.reference_mode
        )

    # Derived views ------------------------------------------------------
    @property
    def n_agents(self) -> int:
        return int(self.entries.shape[0])

    @property
    def positive_tau_min(self) -> float | None:
        """Smallest strictly positive off-diagonal delay, or None if all are zero."""
        n = self.n_agents
        off_diagonal = self.entries[~np.eye(n, dtype=bool)]
        positive = off_diagonal[off_diagonal > 0]
        return float(positive.min()) if positive.size else None

    @cached_property
    def delayed_pairs(self) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
        """Index arrays (i, j), i != j, of pairs read through the history."""
        mask = (self.entries > 0) & ~np.eye(self.n_agents, dtype=bool)
        return np.nonzero(mask)

    @cached_property
    def lags(self) -> NDArray[np.float64]:
        """tau_ji for each entry of :attr:`delayed_pairs`."""
        receivers, sources = self.delayed_pairs
        return self.entries[sources, receivers]

    @cached_property
    def instant_pairs(self) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
        """Index arrays (i, j), i != j, of zero-lag pairs read from the current state."""
        mask = (self.entries == 0) & ~np.eye(self.n_agents, dtype=bool)
        return np.nonzero(mask)

    @cached_property
    def interaction_receivers(self) -> NDArray[np.intp]:
        """Receivers of :attr:`delayed_pairs` followed by those of :attr:`instant_pairs`."""
        return np.concatenate([self.delayed_pairs[0], self.instant_pairs[0]])

    @cached_property
    def receiver_mean(self) -> NDArray[np.float64]:
        """(N, P) matrix mapping per-pair contributions to (1/N) sums per receiver."""
        receivers = self.interaction_receivers
        matrix = np.zeros((self.n_agents, receivers.size))
        matrix[receivers, np.arange(receivers.size)] = 1.0 / self.n_agents
        return matrix
