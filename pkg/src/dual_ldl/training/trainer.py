"""Minibatch training under the joint loss, k-fold cross-validation and the training log."""

from __future__ import annotations

import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from numpy.typing import NDArray

from dual_ldl.core.losses import (
    DistributionTerm,
    euclidean_term,
    joint_loss,
    joint_loss_and_grad,
)
from dual_ldl.core.net import PredictorNet
from dual_ldl.data.dataset import LabeledDataset
from dual_ldl.data.splits import holdout_split, split_kfold
from dual_ldl.errors import (
    ConfigError,
    EmptyDatasetError,
    NumericError,
    ParseError,
    TrainingDivergedError,
)
from dual_ldl.evals.metrics import EvalReport, FoldSummary, evaluate, summarize_reports
from dual_ldl.models.training import (
    AdamWConfig,
    DistributionLoss,
    NetConfig,
    ScoreReduction,
    TrainConfig,
)
from dual_ldl.training.optim import AdamWState, adamw_step, lr_at

log = structlog.get_logger(__name__)


@dataclass(frozen=True)
class EpochRecord:
    """Loss components of one epoch, plus validation metrics.

    ``l_ad`` and ``l_rd`` are per-sample means over the epoch. ``l_score`` is the
    dataset sum under ``sum`` reduction and the per-sample mean under ``mean``.
    ``total`` combines the three with the run's weights.
    """

    epoch: int
    lr: float
    l_ad: float
    l_rd: float
    l_score: float
    total: float
    val_pc: float | None = None
    val_mae: float | None = None
    val_rmse: float | None = None


LOG_COLUMNS = tuple(f.name for f in fields(EpochRecord))


@dataclass
class TrainingLog:
    """Per-epoch records, persisted as CSV with header ``epoch,lr,l_ad,...,val_rmse``.

    Validation columns are left empty when no validation split was used.
    """

    records: list[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final(self) -> EpochRecord:
        if not self.records:
            raise EmptyDatasetError("training log is empty")
        return self.records[-1]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records], columns=list(LOG_COLUMNS))

    def save(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(target, index=False, float_format="%.17g")
        return target

    @classmethod
    def load(cls, path: str | Path) -> TrainingLog:
        try:
            frame = pd.read_csv(path)
        except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
            raise ParseError(f"{path}: not a training log ({exc})") from exc
        if tuple(frame.columns) != LOG_COLUMNS:
            raise ParseError(f"{path}: expected columns {','.join(LOG_COLUMNS)}")
        records = []
        for row in frame.itertuples(index=False):
            values = {
                name: (None if pd.isna(value) else value)
                for name, value in zip(LOG_COLUMNS, row, strict=True)
            }
            values["epoch"] = int(values["epoch"])  # type: ignore[arg-type]
            records.append(EpochRecord(**values))  # type: ignore[arg-type]
        return cls(records)


def kl_term(
    pred: NDArray[np.float64], target: NDArray[np.float64]
) -> tuple[float, NDArray[np.float64]]:
    """(1/n) Σ t·log(t/q) over entries with t > 0, and its gradient w.r.t. q."""
    n = pred.shape[0]
    positive = target > 0.0
    q = np.where(positive, pred, 1.0)
    t = np.where(positive, target, 1.0)
    value = float(np.sum(np.where(positive, target * np.log(t / q), 0.0)) / n)
    grad = np.where(positive, -target / q, 0.0) / n
    return value, grad


DISTRIBUTION_TERMS: dict[DistributionLoss, DistributionTerm] = {
    DistributionLoss.EUCLIDEAN: euclidean_term,
    DistributionLoss.KL: kl_term,
}


def _check_compatible(dataset: LabeledDataset, net: PredictorNet) -> None:
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    if dataset.feature_width != net.config.input_dim:
        raise ConfigError(
            f"features have width {dataset.feature_width}, net expects {net.config.input_dim}"
        )
    if dataset.grid.n_bins != net.config.output_dim:
        raise ConfigError(
            f"labels have {dataset.grid.n_bins} bins, net outputs {net.config.output_dim}"
        )


def validation_report(net: PredictorNet, dataset: LabeledDataset) -> EvalReport:
    prediction = net.predict(dataset.features, dataset.grid)
    return evaluate(prediction.y_hat, dataset.y)


def train(
    dataset: LabeledDataset,
    net: PredictorNet,
    train_config: TrainConfig,
    adamw_config: AdamWConfig,
    validation: LabeledDataset | None = None,
) -> tuple[PredictorNet, TrainingLog]:
    """Fit a copy of ``net`` with seeded minibatch AdamW.

    When ``validation`` is omitted and ``train_config.val_fraction`` is positive,
    a seeded share of ``dataset`` is held out instead.

    Raises:
        ConfigError: The net does not fit the dataset's features or grid.
        TrainingDivergedError: A loss component or gradient became non-finite.
    """
    _check_compatible(dataset, net)
    if validation is None and train_config.val_fraction > 0.0:
        train_ids, val_ids = holdout_split(
            dataset.sample_ids, train_config.val_fraction, train_config.seed
        )
        dataset, validation = dataset.subset(train_ids), dataset.subset(val_ids)

    net = net.copy()
    weights = train_config.effective_weights
    term = DISTRIBUTION_TERMS[train_config.distribution_loss]
    sum_reduction = train_config.score_reduction is ScoreReduction.SUM
    rng = np.random.default_rng(train_config.seed)
    state = AdamWState.zeros_like(net.parameters())
    training_log = TrainingLog()
    n = len(dataset)
    step = 0

    log.info(
        "training_started",
        samples=n,
        epochs=train_config.epochs,
        batch_size=train_config.batch_size,
        params=net.param_count(),
        weights=weights.as_tuple(),
    )
    for epoch in range(train_config.epochs):
        lr = lr_at(epoch, adamw_config)
        order = rng.permutation(n)
        sums = np.zeros(3)
        for start in range(0, n, train_config.batch_size):
            idx = order[start : start + train_config.batch_size]
            try:
                p_hat, cache = net.forward(dataset.features[idx])
                breakdown, grad_p = joint_loss_and_grad(
                    p_hat,
                    dataset.targets(idx),
                    dataset.grid,
                    weights,
                    train_config.score_reduction,
                    term,
                )
                if not math.isfinite(breakdown.total):
                    raise NumericError("total")
                grads = net.backward(cache, grad_p)
            except NumericError as exc:
                log.error("training_diverged", epoch=epoch, step=step + 1, term=exc.term)
                raise TrainingDivergedError(epoch, step + 1, exc.term) from exc
            step += 1
            params, state = adamw_step(net.parameters(), grads, state, adamw_config, step, lr=lr)
            net.set_parameters(params)
            # Summed score losses add up over batches as they are.
            score_weight = 1 if sum_reduction else len(idx)
            sums += np.array([len(idx), len(idx), score_weight]) * np.array(
                [breakdown.l_ad, breakdown.l_rd, breakdown.l_score]
            )

        l_ad, l_rd = float(sums[0] / n), float(sums[1] / n)
        l_score = float(sums[2]) if sum_reduction else float(sums[2] / n)
        total = joint_loss(l_ad, l_rd, l_score, weights).total
        val = validation_report(net, validation) if validation is not None else None
        record = EpochRecord(
            epoch=epoch,
            lr=lr,
            l_ad=l_ad,
            l_rd=l_rd,
            l_score=l_score,
            total=total,
            val_pc=val.pc if val else None,
            val_mae=val.mae if val else None,
            val_rmse=val.rmse if val else None,
        )
        training_log.append(record)
        log.info("epoch_done", **{k: v for k, v in asdict(record).items() if v is not None})
    return net, training_log


@dataclass(frozen=True)
class FoldResult:
    fold: int
    report: EvalReport
    log: TrainingLog
    test_ids: list[str]


@dataclass(frozen=True)
class CrossValResult:
    """Per-fold reports in fold order and their summary."""

    folds: list[FoldResult]
    summary: FoldSummary

    @property
    def reports(self) -> list[EvalReport]:
        return [f.report for f in self.folds]

    @property
    def mean(self) -> EvalReport:
        return self.summary.mean


def cross_validate(
    dataset: LabeledDataset,
    k: int,
    train_config: TrainConfig,
    adamw_config: AdamWConfig,
    net_config: NetConfig,
    workers: int = 1,
    on_fold: Callable[[FoldResult], None] | None = None,
) -> CrossValResult:
    """Train and test one fresh net per fold of a seeded k-fold partition.

    Fold f initializes its net with ``net_config.seed + f``. Folds share no
    mutable state, so up to ``workers`` of them run concurrently; results are
    always returned in fold order.

    Raises:
        ConfigError: k < 2 or k exceeds the number of samples.
    """
    folds = split_kfold(dataset.sample_ids, k, train_config.seed)
    fold_config = train_config.model_copy(update={"val_fraction": 0.0})

    def run_fold(fold: int) -> FoldResult:
        train_ids, test_ids = folds[fold]
        net = PredictorNet.init(net_config.model_copy(update={"seed": net_config.seed + fold}))
        trained, fold_log = train(dataset.subset(train_ids), net, fold_config, adamw_config)
        report = validation_report(trained, dataset.subset(test_ids))
        log.info(
            "fold_done",
            fold=fold,
            pc=report.pc,
            mae=report.mae,
            rmse=report.rmse,
            params=trained.param_count(),
        )
        result = FoldResult(fold=fold, report=report, log=fold_log, test_ids=test_ids)
        if on_fold is not None:
            on_fold(result)
        return result

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_fold, range(k)))
    else:
        results = [run_fold(fold) for fold in range(k)]

    summary = summarize_reports([r.report for r in results])
    log.info(
        "crossval_done",
        folds=k,
        pc=summary.mean.pc,
        mae=summary.mean.mae,
        rmse=summary.mean.rmse,
    )
    return CrossValResult(folds=results, summary=summary)
