import math

import numpy as np
import pytest

from dual_ldl.core.net import init_net
from dual_ldl.errors import ConfigError, NumericError, ParseError, TrainingDivergedError
from dual_ldl.models import AdamWConfig, LossWeights, NetConfig, ScoreReduction, TrainConfig
from dual_ldl.training import trainer as trainer_module
from dual_ldl.training.trainer import (
    LOG_COLUMNS,
    EpochRecord,
    TrainingLog,
    cross_validate,
    kl_term,
    train,
)

FAST = TrainConfig(epochs=3, batch_size=8, seed=1)
ADAMW = AdamWConfig(lr=1e-2, weight_decay=1e-4)


def _same_params(a, b):
    return all(
        x.tobytes() == y.tobytes() for x, y in zip(a.parameters(), b.parameters(), strict=True)
    )


def test_zero_learning_rate_and_decay_keep_parameters(tiny_dataset, tiny_net_config):
    net = init_net(tiny_net_config)
    trained, log = train(tiny_dataset, net, FAST, AdamWConfig(lr=0.0, weight_decay=0.0))
    assert _same_params(net, trained)
    assert len(log) == 3
    assert trained is not net


def test_training_is_deterministic(tiny_dataset, tiny_net_config):
    net = init_net(tiny_net_config)
    a, log_a = train(tiny_dataset, net, FAST, ADAMW)
    b, log_b = train(tiny_dataset, net, FAST, ADAMW)
    assert _same_params(a, b)
    assert log_a.records == log_b.records


def test_training_lowers_the_loss(tiny_dataset, tiny_net_config):
    config = FAST.model_copy(update={"epochs": 25})
    _, log = train(tiny_dataset, init_net(tiny_net_config), config, ADAMW)
    assert log.final.total < log.records[0].total


def test_module_restriction_matches_zero_weights(tiny_dataset, tiny_net_config):
    net = init_net(tiny_net_config)
    by_module = TrainConfig(epochs=3, batch_size=8, seed=1, modules="ad")
    by_weight = TrainConfig(
        epochs=3,
        batch_size=8,
        seed=1,
        weights=LossWeights(lambda_ad=1.0, lambda_rd=0.0, lambda_score=0.0),
    )
    a, log_a = train(tiny_dataset, net, by_module, ADAMW)
    b, log_b = train(tiny_dataset, net, by_weight, ADAMW)
    assert _same_params(a, b)
    assert log_a.final.total == pytest.approx(log_a.final.l_ad)
    assert log_a.final.l_score > 0


def test_all_zero_active_weights_are_rejected():
    with pytest.raises(ValueError):
        TrainConfig(modules="sr", weights=LossWeights(lambda_score=0.0))


def test_divergence_names_epoch_step_and_term(tiny_dataset, tiny_net_config, mocker):
    mocker.patch(
        "dual_ldl.training.trainer.joint_loss_and_grad", side_effect=NumericError("l_score")
    )
    with pytest.raises(TrainingDivergedError) as excinfo:
        train(tiny_dataset, init_net(tiny_net_config), FAST, ADAMW)
    assert (excinfo.value.epoch, excinfo.value.step, excinfo.value.component) == (0, 1, "l_score")


def test_incompatible_net_is_rejected(tiny_dataset):
    with pytest.raises(ConfigError):
        train(tiny_dataset, init_net(NetConfig(input_dim=3)), FAST, ADAMW)
    with pytest.raises(ConfigError):
        train(tiny_dataset, init_net(NetConfig(input_dim=4, output_dim=20)), FAST, ADAMW)


def test_validation_fraction_fills_validation_columns(tiny_dataset, tiny_net_config):
    config = FAST.model_copy(update={"val_fraction": 0.2})
    _, log = train(tiny_dataset, init_net(tiny_net_config), config, ADAMW)
    assert all(r.val_mae is not None for r in log.records)
    assert log.final.val_rmse >= log.final.val_mae


def test_learning_rate_schedule_is_logged(tiny_dataset, tiny_net_config):
    config = FAST.model_copy(update={"epochs": 4})
    adamw = ADAMW.model_copy(update={"step_every": 2, "step_gamma": 0.5})
    _, log = train(tiny_dataset, init_net(tiny_net_config), config, adamw)
    assert [r.lr for r in log.records] == pytest.approx([1e-2, 1e-2, 5e-3, 5e-3])


def test_kl_term_and_gradient():
    target = np.array([[0.5, 0.5, 0.0]])
    value, grad = kl_term(target.copy(), target)
    assert value == pytest.approx(0.0)
    pred = np.array([[0.25, 0.5, 0.25]])
    value, grad = kl_term(pred, target)
    assert value == pytest.approx(0.5 * math.log(2))
    np.testing.assert_allclose(grad, [[-2.0, -1.0, 0.0]])


def test_kl_distribution_loss_trains(tiny_dataset, tiny_net_config):
    config = TrainConfig(epochs=3, batch_size=8, seed=1, distribution_loss="kl")
    _, log = train(tiny_dataset, init_net(tiny_net_config), config, ADAMW)
    assert all(math.isfinite(r.total) for r in log.records)


def test_training_log_round_trip(tmp_path):
    log = TrainingLog(
        [
            EpochRecord(0, 1e-3, 0.1, 0.2, 3.5, 3.8),
            EpochRecord(1, 1e-3, 0.05, 0.1, 1.25, 1.4, val_pc=0.9, val_mae=0.3, val_rmse=0.4),
        ]
    )
    path = log.save(tmp_path / "log.csv")
    assert path.read_text(encoding="utf-8").splitlines()[0] == ",".join(LOG_COLUMNS)
    assert TrainingLog.load(path).records == log.records


def test_training_log_rejects_foreign_csv(write_csv):
    with pytest.raises(ParseError):
        TrainingLog.load(write_csv("x.csv", "a,b\n1,2\n"))


def test_cross_validate_reports_every_fold(tiny_dataset, tiny_net_config):
    seen = []
    result = cross_validate(
        tiny_dataset, 3, FAST, ADAMW, tiny_net_config, on_fold=lambda f: seen.append(f.fold)
    )
    assert [f.fold for f in result.folds] == [0, 1, 2]
    assert sorted(seen) == [0, 1, 2]
    tested = sorted(sid for f in result.folds for sid in f.test_ids)
    assert tested == sorted(tiny_dataset.sample_ids)
    assert result.summary.n_folds == 3
    assert result.mean.mae == pytest.approx(np.mean([r.mae for r in result.reports]))


def test_cross_validate_is_independent_of_worker_count(tiny_dataset, tiny_net_config):
    serial = cross_validate(tiny_dataset, 3, FAST, ADAMW, tiny_net_config, workers=1)
    parallel = cross_validate(tiny_dataset, 3, FAST, ADAMW, tiny_net_config, workers=3)
    assert serial.reports == parallel.reports


@pytest.mark.parametrize("reduction", list(ScoreReduction))
def test_epoch_log_follows_the_score_reduction(mocker, tiny_dataset, tiny_net_config, reduction):
    spy = mocker.spy(trainer_module, "joint_loss_and_grad")
    config = TrainConfig(epochs=1, batch_size=8, seed=1, score_reduction=reduction)
    _, log = train(tiny_dataset, init_net(tiny_net_config), config, ADAMW)
    breakdowns = [result[0] for result in spy.spy_return_list]
    sizes = [8, 8, 8, 6]
    assert len(breakdowns) == len(sizes)

    record = log.final
    l_ad = sum(s * b.l_ad for s, b in zip(sizes, breakdowns, strict=True)) / 30
    assert record.l_ad == pytest.approx(l_ad, rel=1e-12)
    if reduction is ScoreReduction.SUM:
        expected_score = sum(b.l_score for b in breakdowns)
    else:
        expected_score = sum(s * b.l_score for s, b in zip(sizes, breakdowns, strict=True)) / 30
    assert record.l_score == pytest.approx(expected_score, rel=1e-12)
    assert record.total == pytest.approx(record.l_ad + record.l_rd + record.l_score, rel=1e-12)
