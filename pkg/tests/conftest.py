from pathlib import Path

import pytest

from dual_ldl.data.dataset import LabeledDataset, build_dataset
from dual_ldl.data.ratings import RatingRecordSet
from dual_ldl.data.synthetic import generate_synthetic
from dual_ldl.models import NetConfig, SynthConfig


@pytest.fixture(autouse=True)
def quiet_settings(mocker):
    """Keep tests from writing log files into the working directory."""
    mocker.patch("dual_ldl.config.settings.settings.log_file", False)
    mocker.patch("dual_ldl.config.settings.settings.log_format", "console")


@pytest.fixture()
def write_csv(tmp_path: Path):
    """Write ``text`` to ``tmp_path/name`` and return the path."""

    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture()
def tiny_synth_config() -> SynthConfig:
    return SynthConfig(
        n_samples=30,
        feature_dim=4,
        raters_per_sample=20,
        rater_noise=0.4,
        feature_noise=0.05,
        seed=3,
    )


@pytest.fixture()
def tiny_records(tiny_synth_config: SynthConfig) -> RatingRecordSet:
    records, _ = generate_synthetic(tiny_synth_config)
    return records


@pytest.fixture()
def tiny_dataset(tiny_records: RatingRecordSet) -> LabeledDataset:
    return build_dataset(tiny_records)


@pytest.fixture()
def tiny_net_config() -> NetConfig:
    return NetConfig(input_dim=4, hidden_dims=[8], output_dim=40, seed=0)
