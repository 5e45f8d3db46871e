"""Command-line entry point: ``dual-ldl <subcommand> [flags]``.

Subcommands: synth, build-dist, train, crossval, eval, gradcheck, report, study.
Every subcommand writes only inside ``--output-dir``. Exit codes: 0 success,
1 domain or I/O failure, 2 invalid flags or configuration.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

import pandas as pd
import structlog
from pydantic import ValidationError
from tabulate import tabulate

from dual_ldl.config.logging import configure_logging
from dual_ldl.config.settings import settings
from dual_ldl.core.distributions import RATINGS, DistributionGrid
from dual_ldl.core.net import PredictorNet
from dual_ldl.core.serialization import load_net, save_net
from dual_ldl.data.dataset import build_dataset, build_labels, save_labels
from dual_ldl.data.ratings import RatingRecordSet, load_ratings, load_records
from dual_ldl.data.synthetic import generate_synthetic, write_synthetic
from dual_ldl.errors import ConfigError, DualLdlError, ParseError, ShapeError
from dual_ldl.evals.gradcheck import DEFAULT_CASES, DEFAULT_TOLERANCE, run_gradcheck
from dual_ldl.evals.metrics import EvalReport, evaluate, report_table
from dual_ldl.evals.studies import StudyKind, run_study, study_table
from dual_ldl.models import (
    AdamWConfig,
    DistributionFamily,
    DistributionLoss,
    LossWeights,
    NetConfig,
    ScoreReduction,
    StdMode,
    SynthConfig,
    TrainConfig,
)
from dual_ldl.training.trainer import TrainingLog, cross_validate, train

log = structlog.get_logger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2
MODEL_FILE = "model.bin"
LOG_FILE = "training_log.csv"
LABELS_FILE = "labels.csv"
PREDICTIONS_FILE = "predictions.csv"
FOLDS_FILE = "fold_reports.csv"


# ── Flag parsing ──────────────────────────────────────────────────────────────


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}"
        ) from exc


def _weights(text: str) -> LossWeights:
    try:
        a, b, c = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected three comma-separated weights, got {text!r}"
        ) from exc
    return LossWeights(lambda_ad=a, lambda_rd=b, lambda_score=c)


def _weight_list(text: str) -> list[LossWeights]:
    return [_weights(part) for part in text.split(";") if part.strip()]


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.seed)
    common.add_argument("--output-dir", type=Path, default=Path(settings.output_dir))
    common.add_argument("-v", "--verbose", action="count", default=0)
    return common


def _label_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--family", choices=[f.value for f in DistributionFamily], default="laplace")
    flags.add_argument("--delta-l", type=float, default=0.1)
    flags.add_argument("--std-mode", choices=[m.value for m in StdMode], default="population")
    return flags


def _training_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False, parents=[_label_flags()])
    flags.add_argument("--ratings", type=Path, required=True)
    flags.add_argument("--features", type=Path, required=True)
    flags.add_argument("--epochs", type=int, default=settings.epochs)
    flags.add_argument("--batch-size", type=int, default=settings.batch_size)
    flags.add_argument("--lr", type=float, default=1e-3)
    flags.add_argument("--weight-decay", type=float, default=1e-2)
    flags.add_argument("--step-gamma", type=float, default=0.1)
    flags.add_argument("--step-every", type=int, default=settings.step_every)
    flags.add_argument("--hidden", type=_int_list, default=list(settings.hidden_dims))
    flags.add_argument("--modules", default="ad,rd,sr")
    flags.add_argument("--lambda", dest="weights", type=_weights, default=LossWeights())
    flags.add_argument(
        "--score-reduction", choices=[r.value for r in ScoreReduction], default="sum"
    )
    flags.add_argument(
        "--distribution-loss", choices=[d.value for d in DistributionLoss], default="euclidean"
    )
    return flags


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="dual-ldl", description="Dual label distribution learning for attractiveness scores."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="Write a synthetic rater panel")
    synth.add_argument("--n", type=int, default=settings.n_samples)
    synth.add_argument("--feature-dim", type=int, default=settings.feature_dim)
    synth.add_argument("--raters", type=int, default=settings.raters_per_sample)
    synth.add_argument("--rater-noise", type=float, default=settings.rater_noise)
    synth.add_argument("--feature-noise", type=float, default=settings.feature_noise)

    build = sub.add_parser(
        "build-dist", parents=[common, _label_flags()], help="Write per-sample label bundles"
    )
    build.add_argument("--ratings", type=Path, required=True)

    training = _training_flags()
    tr = sub.add_parser("train", parents=[common, training], help="Train one model")
    tr.add_argument("--val-fraction", type=float, default=0.0)

    cv = sub.add_parser("crossval", parents=[common, training], help="k-fold cross-validation")
    cv.add_argument("--k", type=int, default=settings.cv_folds)
    cv.add_argument("--workers", type=int, default=settings.cv_workers)

    study = sub.add_parser(
        "study", parents=[common, training], help="Cross-validate study variants"
    )
    study.add_argument("--kind", choices=[k.value for k in StudyKind], required=True)
    study.add_argument("--k", type=int, default=settings.cv_folds)
    study.add_argument("--workers", type=int, default=settings.cv_workers)
    study.add_argument("--lambdas", type=_weight_list, default=None, help="e.g. '1,1,1;2,1,1'")

    ev = sub.add_parser("eval", parents=[common], help="Score a model or compare score files")
    ev.add_argument("--model", type=Path)
    ev.add_argument("--features", type=Path)
    ev.add_argument("--ratings", type=Path)
    ev.add_argument("--pred", type=Path)
    ev.add_argument("--truth", type=Path)

    gc = sub.add_parser("gradcheck", parents=[common], help="Finite-difference gradient checks")
    gc.add_argument("--cases", type=int, default=DEFAULT_CASES)
    gc.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    gc.add_argument("--perturb-analytic", action="store_true")

    rep = sub.add_parser("report", parents=[common], help="Summarize training logs")
    rep.add_argument("logs", type=Path, nargs="+")
    return parser


# ── Config assembly (validated before any work) ───────────────────────────────


def _train_config(args: argparse.Namespace, val_fraction: float = 0.0) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        weights=args.weights,
        family=args.family,
        modules=args.modules,
        score_reduction=args.score_reduction,
        distribution_loss=args.distribution_loss,
        delta_l=args.delta_l,
        std_mode=args.std_mode,
        val_fraction=val_fraction,
    )


def _adamw_config(args: argparse.Namespace) -> AdamWConfig:
    return AdamWConfig(
        lr=args.lr,
        weight_decay=args.weight_decay,
        step_gamma=args.step_gamma,
        step_every=args.step_every,
    )


def _grid(delta_l: float) -> DistributionGrid:
    try:
        return DistributionGrid(delta_l=delta_l)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ── Subcommands ───────────────────────────────────────────────────────────────


def cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        n_samples=args.n,
        feature_dim=args.feature_dim,
        raters_per_sample=args.raters,
        rater_noise=args.rater_noise,
        feature_noise=args.feature_noise,
        seed=args.seed,
    )
    records, hidden = generate_synthetic(config)
    paths = write_synthetic(records, hidden, config, args.output_dir)
    print(f"wrote {paths.ratings}, {paths.features}, {paths.manifest}")
    return EXIT_OK


def cmd_build_dist(args: argparse.Namespace) -> int:
    grid = _grid(args.delta_l)
    family, std_mode = DistributionFamily(args.family), StdMode(args.std_mode)
    bundles = build_labels(load_ratings(args.ratings), grid, family, std_mode)
    path = save_labels(bundles, args.output_dir / LABELS_FILE)
    print(f"wrote {len(bundles)} label bundles ({grid.n_bins} bins) to {path}")
    return EXIT_OK


def _prepare_training(
    args: argparse.Namespace, val_fraction: float = 0.0
) -> tuple[RatingRecordSet, DistributionGrid, TrainConfig, AdamWConfig, NetConfig]:
    train_config = _train_config(args, val_fraction)
    adamw_config = _adamw_config(args)
    grid = _grid(train_config.delta_l)
    records = load_records(args.ratings, args.features)
    net_config = NetConfig(
        input_dim=records.feature_width or 1,
        hidden_dims=args.hidden,
        output_dim=grid.n_bins,
        seed=args.seed,
    )
    return records, grid, train_config, adamw_config, net_config


def cmd_train(args: argparse.Namespace) -> int:
    records, grid, train_config, adamw_config, net_config = _prepare_training(
        args, args.val_fraction
    )
    dataset = build_dataset(records, grid, train_config.family, train_config.std_mode)
    net, training_log = train(dataset, PredictorNet.init(net_config), train_config, adamw_config)
    save_net(net, args.output_dir / MODEL_FILE)
    training_log.save(args.output_dir / LOG_FILE)

    final = training_log.final
    print(
        f"epoch {final.epoch}: total={final.total:.4f} l_ad={final.l_ad:.4f} "
        f"l_rd={final.l_rd:.4f} l_score={final.l_score:.4f}"
    )
    if final.val_mae is not None and final.val_rmse is not None:
        val = EvalReport(pc=final.val_pc, mae=final.val_mae, rmse=final.val_rmse, n=0)
        print(report_table([val], ["validation"]))
    return EXIT_OK


def cmd_crossval(args: argparse.Namespace) -> int:
    records, grid, train_config, adamw_config, net_config = _prepare_training(args)
    dataset = build_dataset(records, grid, train_config.family, train_config.std_mode)
    result = cross_validate(
        dataset, args.k, train_config, adamw_config, net_config, workers=args.workers
    )
    args.output_dir.mkdir(parents=True, exist_ok=True)
    for fold in result.folds:
        fold.log.save(args.output_dir / f"fold{fold.fold + 1}_{LOG_FILE}")
    pd.DataFrame(
        [
            {
                "fold": f.fold + 1,
                "pc": f.report.pc,
                "mae": f.report.mae,
                "rmse": f.report.rmse,
                "n": f.report.n,
            }
            for f in result.folds
        ]
    ).to_csv(args.output_dir / FOLDS_FILE, index=False, float_format="%.17g")
    print(report_table(result.reports, [f"fold {f.fold + 1}" for f in result.folds]))
    return EXIT_OK


def cmd_study(args: argparse.Namespace) -> int:
    records, _, train_config, adamw_config, net_config = _prepare_training(args)
    rows = run_study(
        StudyKind(args.kind),
        records,
        args.k,
        train_config,
        adamw_config,
        net_config,
        workers=args.workers,
        lambdas=args.lambdas,
    )
    table = study_table(rows)
    args.output_dir.mkdir(parents=True, exist_ok=True)
    (args.output_dir / f"study_{args.kind}.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return EXIT_OK


def _read_scores(path: Path) -> pd.Series:
    try:
        frame = pd.read_csv(path, dtype={"sample_id": str})
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if list(frame.columns[:2]) != ["sample_id", "score"]:
        raise ParseError(f"{path}: header must start with sample_id,score")
    return frame.set_index("sample_id")["score"].astype(float)


def cmd_eval(args: argparse.Namespace) -> int:
    if args.pred is not None or args.truth is not None:
        if args.pred is None or args.truth is None:
            raise ConfigError("--pred and --truth go together")
        pred, truth = _read_scores(args.pred), _read_scores(args.truth)
        if set(pred.index) != set(truth.index):
            raise ShapeError("prediction and truth files cover different sample ids")
        report = evaluate(pred.loc[truth.index].to_numpy(), truth.to_numpy())
        print(report_table([report], [args.pred.stem]))
        return EXIT_OK

    if args.model is None or args.features is None or args.ratings is None:
        raise ConfigError("eval needs --model, --features and --ratings (or --pred and --truth)")
    net = load_net(args.model)
    grid = _grid((5.0 - 1.0) / net.config.output_dim)
    dataset = build_dataset(load_records(args.ratings, args.features), grid)
    prediction = net.predict(dataset.features, grid)

    frame = pd.DataFrame(prediction.r_hat, columns=[f"r_hat{m}" for m in RATINGS])
    frame.insert(0, "y_hat", prediction.y_hat)
    frame.insert(0, "score", dataset.y)
    frame.insert(0, "sample_id", list(dataset.sample_ids))
    args.output_dir.mkdir(parents=True, exist_ok=True)
    frame.to_csv(args.output_dir / PREDICTIONS_FILE, index=False, float_format="%.17g")

    report = evaluate(prediction.y_hat, dataset.y)
    print(report_table([report], [args.model.stem]))
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    summary = run_gradcheck(
        cases=args.cases,
        seed=args.seed,
        tolerance=args.tolerance,
        perturb_analytic=args.perturb_analytic,
    )
    print(f"{len(summary.cases)} cases, max relative error {summary.max_rel_error:.3e}")
    for case in summary.failures:
        print(
            f"FAIL case {case.index} ({case.kind}) seed={case.seed} "
            f"rel_error={case.rel_error:.3e}"
        )
    print("PASS" if summary.passed else "FAIL")
    return EXIT_OK if summary.passed else EXIT_FAILURE


def cmd_report(args: argparse.Namespace) -> int:
    finals: list[EvalReport] = []
    labels: list[str] = []
    for path in args.logs:
        training_log = TrainingLog.load(path)
        frame = training_log.to_frame().dropna(axis=1, how="all")
        print(f"{path}:")
        print(tabulate(frame, headers="keys", showindex=False, floatfmt=".4f"))
        final = training_log.final
        if final.val_mae is not None and final.val_rmse is not None:
            finals.append(EvalReport(pc=final.val_pc, mae=final.val_mae, rmse=final.val_rmse, n=0))
            labels.append(Path(path).stem)
    if finals:
        print(report_table(finals, labels))
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "build-dist": cmd_build_dist,
    "train": cmd_train,
    "crossval": cmd_crossval,
    "study": cmd_study,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(
        output_dir=str(args.output_dir), level="DEBUG" if args.verbose else None
    )
    structlog.contextvars.bind_contextvars(command=args.command)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ConfigError) as exc:
        log.error("invalid_configuration", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DualLdlError, OSError) as exc:
        log.error("command_failed", error=str(exc), error_type=type(exc).__name__)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    finally:
        structlog.contextvars.clear_contextvars()


if __name__ == "__main__":
    sys.exit(main())
