import math

import numpy as np
import pytest

from dual_ldl.errors import NumericError, PcUndefinedError, ShapeError
from dual_ldl.evals.metrics import EvalReport, evaluate, report_table, summarize_reports


def test_perfect_prediction():
    report = evaluate([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert report.pc == pytest.approx(1.0)
    assert report.mae == 0.0
    assert report.rmse == 0.0
    assert report.n == 3


def test_reversed_prediction():
    report = evaluate([3.0, 2.0, 1.0], [1.0, 2.0, 3.0])
    assert report.pc == pytest.approx(-1.0)
    assert report.mae == pytest.approx(4 / 3)
    assert report.rmse == pytest.approx(math.sqrt(8 / 3))


def test_constant_offset_prediction():
    report = evaluate([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])
    assert report.pc == pytest.approx(1.0)
    assert report.mae == pytest.approx(1.0)
    assert report.rmse == pytest.approx(1.0)


def test_constant_prediction_has_undefined_pc():
    report = evaluate([2.0, 2.0], [1.0, 3.0])
    assert report.pc is None
    assert report.mae == 1.0
    assert report.rmse == 1.0
    with pytest.raises(PcUndefinedError):
        report.require_pc()


def test_single_sample_has_undefined_pc():
    assert evaluate([2.5], [3.0]).pc is None


def test_pc_is_invariant_to_affine_rescaling():
    rng = np.random.default_rng(3)
    truth = rng.uniform(1, 5, size=50)
    pred = truth + rng.normal(0, 0.3, size=50)
    base = evaluate(pred, truth).pc
    assert evaluate(pred + 7.0, truth).pc == pytest.approx(base, abs=1e-12)
    assert evaluate(pred * 3.0, truth).pc == pytest.approx(base, abs=1e-12)
    assert evaluate(pred * -2.0, truth).pc == pytest.approx(-base, abs=1e-12)


def test_pc_agrees_with_numpy_correlation():
    rng = np.random.default_rng(9)
    pred, truth = rng.uniform(1, 5, size=30), rng.uniform(1, 5, size=30)
    assert evaluate(pred, truth).pc == pytest.approx(np.corrcoef(pred, truth)[0, 1], abs=1e-12)


def test_rmse_is_never_below_mae():
    rng = np.random.default_rng(4)
    for _ in range(100):
        report = evaluate(rng.uniform(1, 5, 10), rng.uniform(1, 5, 10))
        assert report.rmse >= report.mae


def test_evaluate_rejects_bad_input():
    with pytest.raises(ShapeError):
        evaluate([1.0, 2.0], [1.0])
    with pytest.raises(ShapeError):
        evaluate([], [])
    with pytest.raises(NumericError):
        evaluate([1.0, float("nan")], [1.0, 2.0])


def test_summarize_skips_undefined_pc():
    summary = summarize_reports(
        [EvalReport(0.8, 0.2, 0.3, 5), EvalReport(None, 0.4, 0.5, 5), EvalReport(0.6, 0.3, 0.4, 5)]
    )
    assert summary.mean.pc == pytest.approx(0.7)
    assert summary.pc_std == pytest.approx(0.1)
    assert summary.mean.mae == pytest.approx(0.3)
    assert summary.mean.n == 15
    assert summary.n_folds == 3


def test_single_report_table_is_stable():
    table = report_table([EvalReport(pc=1.0, mae=0.0, rmse=0.0, n=3)], labels=["fold 1"])
    assert table.splitlines() == [
        "            PC     MAE    RMSE",
        "------  ------  ------  ------",
        "fold 1  1.0000  0.0000  0.0000",
        "mean    1.0000  0.0000  0.0000",
    ]


def test_table_has_mean_and_std_rows_for_several_reports():
    reports = [EvalReport(0.9, 0.3, 0.4, 10), EvalReport(None, 0.5, 0.6, 10)]
    lines = report_table(reports).splitlines()
    assert len(lines) == 2 + 2 + 2
    assert lines[2].split() == ["0", "0.9000", "0.3000", "0.4000"]
    assert lines[3].split() == ["1", "n/a", "0.5000", "0.6000"]
    assert lines[4].split() == ["mean", "0.9000", "0.4000", "0.5000"]
    assert lines[5].split() == ["std", "0.0000", "0.1000", "0.1000"]


def test_table_requires_reports():
    with pytest.raises(ShapeError):
        report_table([])


def test_table_without_summary_rows():
    reports = [EvalReport(0.9, 0.3, 0.4, 10), EvalReport(0.7, 0.5, 0.6, 10)]
    lines = report_table(reports, ["gaussian", "laplace"], summary_rows=False).splitlines()
    assert [line.split()[0] for line in lines[2:]] == ["gaussian", "laplace"]
