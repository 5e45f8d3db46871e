"""Score regression metrics and report tables.

Implements:
- evaluate: Pearson correlation (PC), mean absolute error and root mean squared error
- summarize_reports: per-metric mean and spread over cross-validation folds
- report_table: aligned plain-text table with one row per report plus mean (and std) rows
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import ArrayLike
from scipy import stats
from sklearn.metrics import mean_absolute_error, mean_squared_error
from tabulate import tabulate

from dual_ldl.errors import NumericError, PcUndefinedError, ShapeError

log = structlog.get_logger(__name__)

UNDEFINED = "n/a"
TABLE_HEADERS = ("", "PC", "MAE", "RMSE")


@dataclass(frozen=True)
class EvalReport:
    """PC, MAE and RMSE over n samples.

    ``pc`` is None when either vector is constant, where correlation is undefined.
    """

    pc: float | None
    mae: float
    rmse: float
    n: int

    def require_pc(self) -> float:
        if self.pc is None:
            raise PcUndefinedError("Pearson correlation is undefined for a constant vector")
        return self.pc


@dataclass(frozen=True)
class FoldSummary:
    """Mean report over folds and the population std of each metric."""

    mean: EvalReport
    pc_std: float | None
    mae_std: float
    rmse_std: float
    n_folds: int


def _pearson(pred: np.ndarray, truth: np.ndarray) -> float | None:
    if pred.size < 2 or np.ptp(pred) == 0.0 or np.ptp(truth) == 0.0:
        return None
    return float(np.clip(stats.pearsonr(pred, truth).statistic, -1.0, 1.0))


def evaluate(pred: ArrayLike, truth: ArrayLike) -> EvalReport:
    """Compare predicted with ground-truth scores.

    Raises:
        ShapeError: Lengths differ or are zero.
        NumericError: A score is not finite.
    """
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    if p.shape != t.shape or p.size == 0:
        raise ShapeError(f"{p.size} predictions for {t.size} ground-truth scores")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
        raise NumericError("scores")

    mae = float(mean_absolute_error(t, p))
    rmse = math.sqrt(float(mean_squared_error(t, p)))
    # Power-mean inequality; allow rounding in the last place.
    if rmse < mae - 1e-12 * max(1.0, mae):
        raise NumericError("rmse", f"rmse {rmse} below mae {mae}")
    rmse = max(rmse, mae)

    pc = _pearson(p, t)
    if pc is None:
        log.warning("pc_undefined", n=int(p.size))
    return EvalReport(pc=pc, mae=mae, rmse=rmse, n=int(p.size))


def summarize_reports(reports: Sequence[EvalReport]) -> FoldSummary:
    """Arithmetic mean per metric; PC averages only the folds where it is defined."""
    if not reports:
        raise ShapeError("no reports to summarize")
    pcs = np.array([r.pc for r in reports if r.pc is not None], dtype=np.float64)
    maes = np.array([r.mae for r in reports])
    rmses = np.array([r.rmse for r in reports])
    mean = EvalReport(
        pc=float(pcs.mean()) if pcs.size else None,
        mae=float(maes.mean()),
        rmse=float(rmses.mean()),
        n=sum(r.n for r in reports),
    )
    return FoldSummary(
        mean=mean,
        pc_std=float(pcs.std()) if pcs.size else None,
        mae_std=float(maes.std()),
        rmse_std=float(rmses.std()),
        n_folds=len(reports),
    )


def _fmt(value: float | None) -> str:
    return UNDEFINED if value is None else f"{value:.4f}"


def report_table(
    reports: Sequence[EvalReport],
    labels: Sequence[str | None] | None = None,
    summary_rows: bool = True,
) -> str:
    """Plain-text table: one row per report, then ``mean`` and, for several reports, ``std``.

    Rows with an empty label are labeled with their index. Values carry four decimals.
    ``summary_rows=False`` drops the mean and std rows, for rows that are not folds.
    """
    if not reports:
        raise ShapeError("report_table needs at least one report")
    names = list(labels or [])
    names += [None] * (len(reports) - len(names))
    rows = [
        [name or str(i), _fmt(r.pc), _fmt(r.mae), _fmt(r.rmse)]
        for i, (name, r) in enumerate(zip(names, reports, strict=False))
    ]
    if summary_rows:
        summary = summarize_reports(reports)
        rows.append(
            ["mean", _fmt(summary.mean.pc), _fmt(summary.mean.mae), _fmt(summary.mean.rmse)]
        )
        if len(reports) > 1:
            rows.append(
                ["std", _fmt(summary.pc_std), _fmt(summary.mae_std), _fmt(summary.rmse_std)]
            )
    return str(
        tabulate(
            rows,
            headers=list(TABLE_HEADERS),
            tablefmt="simple",
            disable_numparse=True,
            colalign=("left", "right", "right", "right"),
        )
    )
