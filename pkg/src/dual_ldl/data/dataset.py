"""Per-sample label bundles and the immutable training dataset built from them."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from numpy.typing import NDArray

from dual_ldl.core.distributions import (
    DEFAULT_GRID,
    RATINGS,
    AttractivenessDistribution,
    DistributionGrid,
    RatingDistribution,
    build_attractiveness_distribution,
    build_rating_distribution,
)
from dual_ldl.core.losses import LossTargets
from dual_ldl.data.ratings import RatingRecordSet
from dual_ldl.errors import ConfigError, EmptyDatasetError
from dual_ldl.models.training import DistributionFamily, StdMode

log = structlog.get_logger(__name__)


@dataclass(frozen=True)
class LabelBundle:
    """Ground truth of one sample: score y, rating spread σ, r and p."""

    y: float
    sigma: float
    r: RatingDistribution
    p: AttractivenessDistribution


def rating_moments(
    ratings: Sequence[int], std_mode: StdMode = StdMode.POPULATION
) -> tuple[float, float]:
    """(mean, standard deviation) of one sample's ratings."""
    values = np.asarray(ratings, dtype=np.float64)
    if std_mode is StdMode.SAMPLE and values.size > 1:
        return float(values.mean()), float(values.std(ddof=1))
    return float(values.mean()), float(values.std(ddof=0))


def build_labels(
    records: RatingRecordSet,
    grid: DistributionGrid | None = None,
    family: DistributionFamily = DistributionFamily.LAPLACE,
    std_mode: StdMode = StdMode.POPULATION,
) -> dict[str, LabelBundle]:
    """Label bundle of every sample, in record order.

    y is taken as Σ m·r_m so it agrees with the rating distribution exactly.
    """
    grid = grid or DEFAULT_GRID
    if not len(records):
        raise EmptyDatasetError("no samples to label")
    ratings_axis = np.asarray(RATINGS, dtype=np.float64)
    bundles: dict[str, LabelBundle] = {}
    for sample_id, ratings in records.ratings.items():
        r = build_rating_distribution(ratings)
        y = float(ratings_axis @ r.probs)
        _, sigma = rating_moments(ratings, std_mode)
        p = build_attractiveness_distribution(y, sigma, grid, family)
        bundles[sample_id] = LabelBundle(y=y, sigma=sigma, r=r, p=p)
    log.debug("labels_built", samples=len(bundles), family=family.value, bins=grid.n_bins)
    return bundles


def save_labels(bundles: dict[str, LabelBundle], path: str | Path) -> Path:
    """CSV with columns sample_id, y, sigma, r1..r5, p0..p{K-1}."""
    if not bundles:
        raise EmptyDatasetError("no label bundles to write")
    ids = list(bundles)
    n_bins = bundles[ids[0]].p.probs.shape[0]
    frame = pd.DataFrame(
        np.column_stack(
            [
                [bundles[sid].y for sid in ids],
                [bundles[sid].sigma for sid in ids],
                np.vstack([bundles[sid].r.probs for sid in ids]),
                np.vstack([bundles[sid].p.probs for sid in ids]),
            ]
        ),
        columns=["y", "sigma", *(f"r{m}" for m in RATINGS), *(f"p{j}" for j in range(n_bins))],
    )
    frame.insert(0, "sample_id", ids)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, float_format="%.17g")
    log.info("labels_written", path=str(target), samples=len(ids), bins=n_bins)
    return target


@dataclass(frozen=True)
class LabeledDataset:
    """Features and targets of n samples, row-aligned with ``sample_ids``.

    Attributes:
        sample_ids: Sample identifiers.
        features: (n, d) feature matrix.
        y: (n,) ground-truth scores.
        sigma: (n,) rating standard deviations.
        r: (n, 5) rating distributions.
        p: (n, K) attractiveness distributions.
        grid: Grid the p rows were built on.
    """

    sample_ids: tuple[str, ...]
    features: NDArray[np.float64]
    y: NDArray[np.float64]
    sigma: NDArray[np.float64]
    r: NDArray[np.float64]
    p: NDArray[np.float64]
    grid: DistributionGrid

    def __len__(self) -> int:
        return len(self.sample_ids)

    @property
    def feature_width(self) -> int:
        return int(self.features.shape[1])

    def take(self, indices: Sequence[int] | NDArray[np.int64]) -> LabeledDataset:
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            sample_ids=tuple(self.sample_ids[i] for i in idx),
            features=self.features[idx],
            y=self.y[idx],
            sigma=self.sigma[idx],
            r=self.r[idx],
            p=self.p[idx],
            grid=self.grid,
        )

    def subset(self, sample_ids: Sequence[str]) -> LabeledDataset:
        position = {sid: i for i, sid in enumerate(self.sample_ids)}
        missing = [sid for sid in sample_ids if sid not in position]
        if missing:
            raise ConfigError(f"unknown sample id {missing[0]!r}")
        return self.take([position[sid] for sid in sample_ids])

    def targets(self, indices: Sequence[int] | NDArray[np.int64] | None = None) -> LossTargets:
        if indices is None:
            return LossTargets(p=self.p, r=self.r, y=self.y)
        idx = np.asarray(indices, dtype=np.int64)
        return LossTargets(p=self.p[idx], r=self.r[idx], y=self.y[idx])


def build_dataset(
    records: RatingRecordSet,
    grid: DistributionGrid | None = None,
    family: DistributionFamily = DistributionFamily.LAPLACE,
    std_mode: StdMode = StdMode.POPULATION,
) -> LabeledDataset:
    """Label every sample and stack labels and features into arrays."""
    if records.features is None:
        raise ConfigError("training data needs a features file")
    grid = grid or DEFAULT_GRID
    bundles = build_labels(records, grid, family, std_mode)
    ids = tuple(bundles)
    dataset = LabeledDataset(
        sample_ids=ids,
        features=np.vstack([records.features[sid] for sid in ids]).astype(np.float64),
        y=np.array([bundles[sid].y for sid in ids]),
        sigma=np.array([bundles[sid].sigma for sid in ids]),
        r=np.vstack([bundles[sid].r.probs for sid in ids]),
        p=np.vstack([bundles[sid].p.probs for sid in ids]),
        grid=grid,
    )
    log.info("dataset_built", samples=len(dataset), feature_dim=dataset.feature_width)
    return dataset
