from dual_ldl.models.synthetic import SynthConfig, SynthManifest
from dual_ldl.models.training import (
    AdamWConfig,
    DistributionFamily,
    DistributionLoss,
    LearningModule,
    LossWeights,
    NetConfig,
    ScoreReduction,
    StdMode,
    TrainConfig,
)

__all__ = [
    "AdamWConfig",
    "DistributionFamily",
    "DistributionLoss",
    "LearningModule",
    "LossWeights",
    "NetConfig",
    "ScoreReduction",
    "StdMode",
    "SynthConfig",
    "SynthManifest",
    "TrainConfig",
]
