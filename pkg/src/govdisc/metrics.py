"""Mean absolute percentage error and run comparison tables."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import MetricError

NEAR_ZERO = 1e-6  # degC; smaller measured values are skipped


@dataclass(frozen=True)
class MapeResult:
    value: float  # percent
    n_used: int
    n_skipped: int

    def __float__(self):
        return self.value


def mape(measured, predicted) -> MapeResult:
    """100/N * sum |T_i - That_i| / |T_i| over samples with |T_i| > 1e-6.

    The measured series is always the denominator. Samples where either
    series is non-finite are skipped as well.
    """
    T = np.asarray(measured, dtype=float).ravel()
    P = np.asarray(predicted, dtype=float).ravel()
    if T.shape != P.shape:
        raise MetricError(f"length mismatch: {len(T)} measured vs {len(P)} predicted")
    if len(T) == 0:
        raise MetricError("empty series")
    use = (np.abs(T) > NEAR_ZERO) & np.isfinite(T) & np.isfinite(P)
    n_used = int(use.sum())
    if n_used == 0:
        raise MetricError("every sample was skipped (near-zero or non-finite)")
    value = float(np.mean(np.abs(T[use] - P[use]) / np.abs(T[use])) * 100.0)
    return MapeResult(value, n_used, len(T) - n_used)


@dataclass(frozen=True)
class ComparisonRun:
    name: str
    measured: np.ndarray
    predicted: np.ndarray
    wall_time: float = float("nan")


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    mape: float
    n_used: int
    wall_time: float


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple = ()

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("run,mape_percent,n_used,simulation_time_s\n")
        for r in self.rows:
            buf.write(f"{r.name},{r.mape:.4f},{r.n_used},{r.wall_time:.4f}\n")
        return buf.getvalue()

    def to_text(self) -> str:
        head = ("Run", "MAPE (%)", "Samples", "Simulation time (s)")
        body = [(r.name, f"{r.mape:.4f}", str(r.n_used), f"{r.wall_time:.4f}") for r in self.rows]
        widths = [max(len(x) for x in col) for col in zip(head, *body)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
        lines.append("  ".join("-" * w for w in widths))
        lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
        return "\n".join(lines) + "\n"


def comparison_table(runs: Sequence[ComparisonRun]) -> ComparisonTable:
    rows = []
    for run in runs:
        m = mape(run.measured, run.predicted)
        rows.append(ComparisonRow(run.name, m.value, m.n_used, float(run.wall_time)))
    return ComparisonTable(tuple(rows))
