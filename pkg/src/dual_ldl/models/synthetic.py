"""Synthetic dataset configuration and its on-disk manifest."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class SynthConfig(BaseModel):
    """Parameters of a synthetic rater panel.

    Attributes:
        n_samples: Number of samples to generate.
        feature_dim: Width of each feature vector.
        raters_per_sample: Ratings drawn per sample.
        rater_noise: Laplace scale of each rater's deviation from the hidden score.
        feature_noise: Gaussian std added to every feature.
        seed: Seeds the embedding, hidden scores, ratings and feature noise.
    """

    model_config = ConfigDict(frozen=True)

    n_samples: int = Field(default=500, ge=1)
    feature_dim: int = Field(default=16, ge=1)
    raters_per_sample: int = Field(default=60, ge=1)
    rater_noise: float = Field(default=0.6, ge=0.0)
    feature_noise: float = Field(default=0.1, ge=0.0)
    seed: int = Field(default=0, ge=0)


class SynthManifest(BaseModel):
    """Generator settings and hidden scores, kept for oracle checks only."""

    config: SynthConfig
    hidden_scores: dict[str, float] = Field(description="sample_id -> hidden score y*")
