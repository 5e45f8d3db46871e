"""Pydantic v2 models for everything a training run is configured with.

These models are used throughout the package for:
- validating CLI flags before any computation starts
- carrying hyperparameters between the trainer, optimizer and network
- recording run settings next to the artifacts they produced
"""

from __future__ import annotations

import enum
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DistributionFamily(enum.StrEnum):
    LAPLACE = "laplace"
    GAUSSIAN = "gaussian"


class StdMode(enum.StrEnum):
    POPULATION = "population"  # divide by n
    SAMPLE = "sample"  # divide by n - 1


class LearningModule(enum.StrEnum):
    AD = "ad"  # attractiveness distribution
    RD = "rd"  # rating distribution
    SR = "sr"  # score regression


class ScoreReduction(enum.StrEnum):
    SUM = "sum"
    MEAN = "mean"


class DistributionLoss(enum.StrEnum):
    EUCLIDEAN = "euclidean"
    KL = "kl"


class LossWeights(BaseModel):
    """Weights of the three joint-loss terms.

    Attributes:
        lambda_ad: Weight of the attractiveness distribution loss.
        lambda_rd: Weight of the rating distribution loss.
        lambda_score: Weight of the score regression loss.
    """

    model_config = ConfigDict(frozen=True)

    lambda_ad: float = Field(default=1.0, ge=0.0)
    lambda_rd: float = Field(default=1.0, ge=0.0)
    lambda_score: float = Field(default=1.0, ge=0.0)

    def restricted_to(self, modules: frozenset[LearningModule]) -> LossWeights:
        """Zero the weight of every learning module not in ``modules``."""
        return LossWeights(
            lambda_ad=self.lambda_ad if LearningModule.AD in modules else 0.0,
            lambda_rd=self.lambda_rd if LearningModule.RD in modules else 0.0,
            lambda_score=self.lambda_score if LearningModule.SR in modules else 0.0,
        )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.lambda_ad, self.lambda_rd, self.lambda_score)


class NetConfig(BaseModel):
    """Shape and seed of the feedforward predictor."""

    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(ge=1, description="Width of each feature vector")
    hidden_dims: list[Annotated[int, Field(ge=1)]] = Field(default_factory=lambda: [64, 64])
    output_dim: int = Field(default=40, ge=1, description="Number of score bins")
    seed: int = Field(default=0, ge=0)

    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) of every affine layer, input to output."""
        widths = [self.input_dim, *self.hidden_dims, self.output_dim]
        return list(zip(widths[:-1], widths[1:], strict=True))


class AdamWConfig(BaseModel):
    """AdamW hyperparameters and the step learning-rate schedule."""

    model_config = ConfigDict(frozen=True)

    lr: float = Field(default=1e-3, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    weight_decay: float = Field(default=1e-2, ge=0.0)
    step_gamma: float = Field(default=0.1, gt=0.0, le=1.0)
    step_every: int = Field(default=30, ge=1, description="Epochs between learning-rate drops")


class TrainConfig(BaseModel):
    """Everything the training loop needs besides data, net and optimizer.

    Attributes:
        epochs: Number of passes over the training set.
        batch_size: Minibatch size; the last short batch is kept.
        seed: Seeds minibatch shuffling and the validation split.
        weights: Joint-loss weights before module restriction.
        family: CDF used to build the attractiveness distribution.
        modules: Learning modules whose loss terms are active.
        score_reduction: Sum (as published) or mean over the batch for L_score.
        distribution_loss: Euclidean (default) or KL for the AD/RD terms.
        delta_l: Score interval length of the distribution grid.
        std_mode: Population or sample standard deviation of ratings.
        val_fraction: Share of samples held out for per-epoch validation.
    """

    model_config = ConfigDict(frozen=True)

    epochs: int = Field(default=90, ge=1)
    batch_size: int = Field(default=256, ge=1)
    seed: int = Field(default=0, ge=0)
    weights: LossWeights = Field(default_factory=LossWeights)
    family: DistributionFamily = DistributionFamily.LAPLACE
    modules: frozenset[LearningModule] = Field(
        default_factory=lambda: frozenset(LearningModule), min_length=1
    )
    score_reduction: ScoreReduction = ScoreReduction.SUM
    distribution_loss: DistributionLoss = DistributionLoss.EUCLIDEAN
    delta_l: float = Field(default=0.1, gt=0.0)
    std_mode: StdMode = StdMode.POPULATION
    val_fraction: float = Field(default=0.0, ge=0.0, lt=1.0)

    @field_validator("modules", mode="before")
    @classmethod
    def parse_modules(cls, v: object) -> object:
        # Accept the CLI spelling "ad,rd,sr".
        if isinstance(v, str):
            return frozenset(part.strip().lower() for part in v.split(",") if part.strip())
        return v

    @model_validator(mode="after")
    def check_active_weight(self) -> TrainConfig:
        if not any(self.effective_weights.as_tuple()):
            raise ValueError("every active learning module has zero weight")
        return self

    @property
    def effective_weights(self) -> LossWeights:
        return self.weights.restricted_to(self.modules)
