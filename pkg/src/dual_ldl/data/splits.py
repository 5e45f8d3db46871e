"""Seeded sample partitions for cross-validation and hold-out validation."""

from __future__ import annotations

from collections.abc import Sequence

from sklearn.model_selection import KFold, train_test_split

from dual_ldl.errors import ConfigError

Fold = tuple[list[str], list[str]]


def split_kfold(sample_ids: Sequence[str], k: int, seed: int) -> list[Fold]:
    """Unstratified shuffled k-fold partition; test fold sizes differ by at most one.

    Raises:
        ConfigError: k < 2 or fewer ids than folds.
    """
    ids = list(sample_ids)
    if k < 2:
        raise ConfigError(f"need at least 2 folds, got {k}")
    if len(ids) < k:
        raise ConfigError(f"{k} folds requested for only {len(ids)} samples")
    splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
    return [
        ([ids[i] for i in train_idx], [ids[i] for i in test_idx])
        for train_idx, test_idx in splitter.split(ids)
    ]


def holdout_split(sample_ids: Sequence[str], fraction: float, seed: int) -> Fold:
    """(train ids, validation ids) with ``fraction`` of the samples held out."""
    ids = list(sample_ids)
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"validation fraction must lie in (0, 1), got {fraction}")
    if len(ids) < 2:
        raise ConfigError("a validation split needs at least 2 samples")
    try:
        train_ids, val_ids = train_test_split(
            ids, test_size=fraction, random_state=seed, shuffle=True
        )
    except ValueError as exc:
        raise ConfigError(f"cannot hold out {fraction} of {len(ids)} samples: {exc}") from exc
    return list(train_ids), list(val_ids)
