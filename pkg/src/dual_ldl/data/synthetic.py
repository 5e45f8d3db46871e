"""Seeded synthetic rater panels with informative feature vectors."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog

from dual_ldl.data.ratings import RatingRecordSet, save_features, save_ratings
from dual_ldl.errors import ParseError
from dual_ldl.models.synthetic import SynthConfig, SynthManifest

log = structlog.get_logger(__name__)

HIDDEN_SCORE_RANGE = (1.2, 4.8)
RATINGS_FILE = "ratings.csv"
FEATURES_FILE = "features.csv"
MANIFEST_FILE = "manifest.json"


@dataclass(frozen=True)
class SynthPaths:
    ratings: Path
    features: Path
    manifest: Path


def _score_basis(hidden: np.ndarray) -> np.ndarray:
    # Centred versions of (y*, y*², sin y*) so no column dominates the embedding.
    return np.column_stack([hidden - 3.0, (hidden**2 - 9.0) / 8.0, np.sin(hidden)])


def generate_synthetic(config: SynthConfig) -> tuple[RatingRecordSet, dict[str, float]]:
    """Draw hidden scores, rater panels and features from one seeded generator.

    Each rating is clamp(round(y* + Laplace(0, rater_noise)), 1, 5) with
    halves rounded up. Features are a fixed random affine embedding of
    (y*, y*², sin y*) plus Gaussian feature noise.

    Returns:
        (records with features, sample_id -> hidden score y*)
    """
    rng = np.random.default_rng(config.seed)
    embedding = rng.normal(0.0, 1.0 / np.sqrt(3.0), size=(3, config.feature_dim))
    offset = rng.normal(0.0, 0.1, size=config.feature_dim)

    n = config.n_samples
    hidden = rng.uniform(*HIDDEN_SCORE_RANGE, size=n)
    deviations = rng.laplace(0.0, config.rater_noise, size=(n, config.raters_per_sample))
    ratings = np.clip(np.floor(hidden[:, None] + deviations + 0.5), 1, 5).astype(np.int64)
    features = _score_basis(hidden) @ embedding + offset
    features = features + rng.normal(0.0, config.feature_noise, size=features.shape)

    width = max(5, len(str(n - 1)))
    ids = [f"s{i:0{width}d}" for i in range(n)]
    records = RatingRecordSet(
        ratings={sid: tuple(int(v) for v in ratings[i]) for i, sid in enumerate(ids)},
        features={sid: features[i].copy() for i, sid in enumerate(ids)},
    )
    log.info(
        "synthetic_generated",
        samples=n,
        raters=config.raters_per_sample,
        feature_dim=config.feature_dim,
        seed=config.seed,
    )
    return records, {sid: float(hidden[i]) for i, sid in enumerate(ids)}


def write_synthetic(
    records: RatingRecordSet,
    hidden: dict[str, float],
    config: SynthConfig,
    out_dir: str | Path,
) -> SynthPaths:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if records.features is None:
        raise ValueError("synthetic records always carry features")
    paths = SynthPaths(
        ratings=save_ratings(records, out / RATINGS_FILE),
        features=save_features(records.features, out / FEATURES_FILE),
        manifest=out / MANIFEST_FILE,
    )
    manifest = SynthManifest(config=config, hidden_scores=hidden)
    paths.manifest.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    log.info("synthetic_written", out_dir=str(out))
    return paths


def read_manifest(path: str | Path) -> SynthManifest:
    try:
        return SynthManifest.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, ValueError) as exc:
        raise ParseError(f"{path}: not a synthetic manifest ({exc})") from exc


def label_noise_floor(records: RatingRecordSet, hidden: dict[str, float]) -> float:
    """Mean |mean rating − y*|: the error a perfect predictor of y* makes against labels."""
    gaps = [abs(float(np.mean(records.ratings[sid])) - hidden[sid]) for sid in records.sample_ids]
    return float(np.mean(gaps))
