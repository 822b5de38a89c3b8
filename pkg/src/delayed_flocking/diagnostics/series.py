"""Diagnostics records and the time series written to CSV."""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from ..constants import DIAGNOSTICS_COLUMNS
from ..errors import UsageError


@dataclass(frozen=True, slots=True)
class DiagnosticsRecord:
    """Functionals of the flock at one output time."""

    t: float
    d_X: float
    d_V: float
    R_v: float
    delta_N_tau: float
    psi_floor: float
    envelope_dV: float | None = None
    residual_dV: float | None = None


@dataclass(frozen=True)
class SeriesMetadata:
    """Run-level constants the checks need alongside the records."""

    R_v_tau: float | None = None
    tau_max: float | None = None
    n_agents: int | None = None
    spacing: float | None = None
    reference_mode: bool = False


@dataclass(eq=False)
class DiagnosticsSeries:
    """Ordered diagnostics records of one simulation."""

    records: list[DiagnosticsRecord] = field(default_factory=list)
    metadata: SeriesMetadata = field(default_factory=SeriesMetadata)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DiagnosticsRecord]:
        return iter(self.records)

    def __getitem__(self, index: int) -> DiagnosticsRecord:
        return self.records[index]

    def column(self, name: str) -> NDArray[np.float64]:
        if name not in DIAGNOSTICS_COLUMNS:
            raise UsageError(f"unknown diagnostics column '{name}'")
        return np.array(
            [np.nan if (value := getattr(r, name)) is None else value for r in self.records],
            dtype=float,
        )

    @property
    def times(self) -> NDArray[np.float64]:
        return self.column("t")

    @property
    def has_envelope(self) -> bool:
        return any(r.envelope_dV is not None for r in self.records)

    def with_residuals(self) -> DiagnosticsSeries:
        """Fill residual_dV = D+d_V - (-psi_floor d_V + 2 Delta) by forward differences."""
        if len(self.records) < 2:
            return self
        t = self.times
        d_v = self.column("d_V")
        quotient = np.diff(d_v) / np.diff(t)
        bound = -self.column("psi_floor")[:-1] * d_v[:-1] + 2.0 * self.column("delta_N_tau")[:-1]
        residuals = quotient - bound
        records = [
            replace(record, residual_dV=float(residual))
            for record, residual in zip(self.records, residuals)
        ]
        records.append(replace(self.records[-1], residual_dV=None))
        return DiagnosticsSeries(records=records, metadata=self.metadata)

    # Tabular I/O --------------------------------------------------------
    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {name: self.column(name) for name in DIAGNOSTICS_COLUMNS},
            columns=list(DIAGNOSTICS_COLUMNS),
        )

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, index=False, na_rep="", lineterminator="\n")
        return path

    @classmethod
    def from_frame(
        cls, frame: pd.DataFrame, metadata: SeriesMetadata | None = None
    ) -> DiagnosticsSeries:
        missing = [name for name in DIAGNOSTICS_COLUMNS if name not in frame.columns]
        if missing:
            raise UsageError(f"diagnostics table lacks columns: {', '.join(missing)}")
        records = []
        for row in frame[list(DIAGNOSTICS_COLUMNS)].itertuples(index=False):
            values = {
                name: (None if pd.isna(value) else float(value))
                for name, value in zip(DIAGNOSTICS_COLUMNS, row)
            }
            if any(values[name] is None for name in DIAGNOSTICS_COLUMNS[:6]):
                raise UsageError("diagnostics rows need values for t, d_X, d_V, R_v, delta_N_tau, psi_floor")
            records.append(DiagnosticsRecord(**values))
        return cls(records=records, metadata=metadata or SeriesMetadata())

    @classmethod
    def read_csv(cls, path: Path, metadata: SeriesMetadata | None = None) -> DiagnosticsSeries:
        return cls.from_frame(pd.read_csv(path), metadata=metadata)

    @classmethod
    def from_arrays(
        cls,
        t: Sequence[float],
        d_V: Sequence[float],
        *,
        d_X: Sequence[float] | None = None,
        R_v: Sequence[float] | None = None,
        delta_N_tau: Sequence[float] | None = None,
        psi_floor: Sequence[float] | None = None,
        metadata: SeriesMetadata | None = None,
    ) -> DiagnosticsSeries:
        """Series from columns; unspecified functionals default to 0 (psi_floor to 1)."""
        n = len(t)

        def _col(values: Sequence[float] | None, default: float) -> list[float]:
            return [default] * n if values is None else [float(x) for x in values]

        columns = zip(
            _col(t, 0.0),
            _col(d_X, 0.0),
            _col(d_V, 0.0),
            _col(R_v, 0.0),
            _col(delta_N_tau, 0.0),
            _col(psi_floor, 1.0),
        )
        records = [DiagnosticsRecord(*values) for values in columns]
        return cls(records=records, metadata=metadata or SeriesMetadata())
