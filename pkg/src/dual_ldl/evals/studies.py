"""Ablation and sensitivity studies: cross-validate every variant of one experiment."""

from __future__ import annotations

import enum
import itertools
from collections.abc import Sequence
from dataclasses import dataclass

import structlog

from dual_ldl.core.distributions import SUPPORTED_DELTA_L, DistributionGrid
from dual_ldl.data.dataset import build_dataset
from dual_ldl.data.ratings import RatingRecordSet
from dual_ldl.evals.metrics import report_table
from dual_ldl.models.training import (
    AdamWConfig,
    DistributionFamily,
    LearningModule,
    LossWeights,
    NetConfig,
    TrainConfig,
)
from dual_ldl.training.trainer import CrossValResult, cross_validate

log = structlog.get_logger(__name__)

AD, RD, SR = LearningModule.AD, LearningModule.RD, LearningModule.SR

MODULE_VARIANTS: tuple[tuple[str, frozenset[LearningModule]], ...] = (
    ("AD", frozenset({AD})),
    ("AD+RD", frozenset({AD, RD})),
    ("AD+SR", frozenset({AD, SR})),
    ("AD+RD+SR", frozenset({AD, RD, SR})),
)
LAMBDA_LEVELS = (2.0, 5.0, 10.0)


class StudyKind(enum.StrEnum):
    MODULES = "modules"
    FAMILY = "family"
    DELTA_L = "delta-l"
    LAMBDA = "lambda"


@dataclass(frozen=True)
class StudyVariant:
    label: str
    train_config: TrainConfig


@dataclass(frozen=True)
class StudyRow:
    label: str
    result: CrossValResult


def default_lambda_grid() -> list[LossWeights]:
    """All-ones weights, then each weight alone raised to 2, 5 and 10."""
    grid = [LossWeights()]
    for name, level in itertools.product(("lambda_ad", "lambda_rd", "lambda_score"), LAMBDA_LEVELS):
        grid.append(LossWeights(**{name: level}))
    return grid


def _with(base: TrainConfig, **update: object) -> TrainConfig:
    # Re-validate: a variant may zero out every active module.
    return TrainConfig.model_validate(base.model_dump() | update)


def study_variants(
    kind: StudyKind,
    base: TrainConfig,
    lambdas: Sequence[LossWeights] | None = None,
) -> list[StudyVariant]:
    if kind is StudyKind.MODULES:
        return [
            StudyVariant(label, _with(base, modules=modules))
            for label, modules in MODULE_VARIANTS
        ]
    if kind is StudyKind.FAMILY:
        return [
            StudyVariant(family.value, _with(base, family=family))
            for family in (DistributionFamily.GAUSSIAN, DistributionFamily.LAPLACE)
        ]
    if kind is StudyKind.DELTA_L:
        return [
            StudyVariant(f"dl={d:g}", _with(base, delta_l=d))
            for d in SUPPORTED_DELTA_L
        ]
    variants = []
    for weights in lambdas or default_lambda_grid():
        a, b, c = weights.as_tuple()
        label = f"({a:g},{b:g},{c:g})"
        variants.append(StudyVariant(label, _with(base, weights=weights)))
    return variants


def run_study(
    kind: StudyKind,
    records: RatingRecordSet,
    k: int,
    base: TrainConfig,
    adamw_config: AdamWConfig,
    net_config: NetConfig,
    workers: int = 1,
    lambdas: Sequence[LossWeights] | None = None,
) -> list[StudyRow]:
    """Cross-validate each variant of ``kind`` on the same records and folds.

    Labels are rebuilt per variant since family and Δl change the targets.
    """
    rows = []
    for variant in study_variants(kind, base, lambdas):
        cfg = variant.train_config
        grid = DistributionGrid(delta_l=cfg.delta_l)
        dataset = build_dataset(records, grid, cfg.family, cfg.std_mode)
        net_cfg = net_config.model_copy(update={"output_dim": grid.n_bins})
        log.info("study_variant_started", kind=kind.value, variant=variant.label)
        result = cross_validate(dataset, k, cfg, adamw_config, net_cfg, workers=workers)
        rows.append(StudyRow(variant.label, result))
    return rows


def study_table(rows: Sequence[StudyRow]) -> str:
    return report_table(
        [r.result.mean for r in rows], [r.label for r in rows], summary_rows=False
    )
