"""Rater records: parsing, validation and CSV persistence.

Ratings CSV:  header ``sample_id,rating[,rater_id]``, one row per rating.
Features CSV: header ``sample_id,f0,f1,...``, one row per sample.

Line numbers in errors count data rows from 1; the header is not counted.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from numpy.typing import NDArray

from dual_ldl.errors import (
    EmptyDatasetError,
    InvalidRatingError,
    NoRatersError,
    ParseError,
    ShapeError,
)

log = structlog.get_logger(__name__)

RATING_COLUMNS = ("sample_id", "rating")
MIN_RATING, MAX_RATING = 1, 5


@dataclass(frozen=True)
class RatingRecordSet:
    """Raw integer ratings per sample, optionally with one feature vector each.

    Attributes:
        ratings: sample_id -> ratings in file order.
        features: sample_id -> feature vector, all of one width.
    """

    ratings: Mapping[str, tuple[int, ...]]
    features: Mapping[str, NDArray[np.float64]] | None = field(default=None)

    def __post_init__(self) -> None:
        for sample_id, values in self.ratings.items():
            if not values:
                raise NoRatersError(f"sample {sample_id!r} has no ratings")
            bad = [v for v in values if not MIN_RATING <= v <= MAX_RATING]
            if bad:
                raise InvalidRatingError(f"sample {sample_id!r} has rating {bad[0]} outside 1..5")
        if self.features is not None:
            widths = {vec.shape for vec in self.features.values()}
            if len(widths) > 1:
                raise ShapeError(f"feature vectors have differing shapes {sorted(widths)}")
            missing = [sid for sid in self.ratings if sid not in self.features]
            if missing:
                raise ShapeError(f"{len(missing)} samples lack features, e.g. {missing[0]!r}")

    @property
    def sample_ids(self) -> list[str]:
        return list(self.ratings)

    @property
    def feature_width(self) -> int | None:
        if not self.features:
            return None
        return int(next(iter(self.features.values())).shape[0])

    def __len__(self) -> int:
        return len(self.ratings)

    def with_features(self, features: Mapping[str, NDArray[np.float64]]) -> RatingRecordSet:
        return RatingRecordSet(ratings=self.ratings, features=features)


def _read_frame(path: str | Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise EmptyDatasetError(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not UTF-8: {exc.reason} at byte {exc.start}") from exc
    if frame.empty:
        raise EmptyDatasetError(f"{path} holds no data rows")
    return frame


def load_ratings(path: str | Path) -> RatingRecordSet:
    """Parse a ratings CSV into a RatingRecordSet.

    Raises:
        EmptyDatasetError: The file has no data rows.
        ParseError: A row is malformed or repeats a (sample, rater) pair.
        InvalidRatingError: A rating is outside 1..5.
    """
    frame = _read_frame(path)
    columns = [c.strip() for c in frame.columns]
    if tuple(columns[:2]) != RATING_COLUMNS:
        expected = ",".join(RATING_COLUMNS)
        raise ParseError(f"header must start with {expected}, got {','.join(columns)}")
    has_rater = len(columns) > 2 and columns[2] == "rater_id"

    grouped: dict[str, list[int]] = {}
    seen: set[tuple[str, str]] = set()
    for line, row in enumerate(frame.itertuples(index=False, name=None), start=1):
        sample_id, text = str(row[0]).strip(), str(row[1]).strip()
        if not sample_id:
            raise ParseError("missing sample_id", line)
        try:
            rating = int(text)
        except ValueError as exc:
            raise ParseError(f"rating {text!r} is not an integer", line) from exc
        if not MIN_RATING <= rating <= MAX_RATING:
            raise InvalidRatingError(f"rating {rating} outside 1..5", line)
        if has_rater:
            rater = str(row[2]).strip()
            if rater and (sample_id, rater) in seen:
                raise ParseError(f"duplicate rating of {sample_id!r} by rater {rater!r}", line)
            seen.add((sample_id, rater))
        grouped.setdefault(sample_id, []).append(rating)

    log.info("ratings_loaded", path=str(path), samples=len(grouped), rows=len(frame))
    return RatingRecordSet(ratings={sid: tuple(v) for sid, v in grouped.items()})


def load_features(path: str | Path) -> dict[str, NDArray[np.float64]]:
    frame = _read_frame(path)
    if frame.columns[0].strip() != "sample_id" or frame.shape[1] < 2:
        raise ParseError("features header must be sample_id,f0,f1,...")
    ids = frame.iloc[:, 0].str.strip()
    duplicated = ids[ids.duplicated()]
    if not duplicated.empty:
        line = int(duplicated.index[0]) + 1
        raise ParseError(f"duplicate sample_id {duplicated.iloc[0]!r}", line)
    try:
        values = frame.iloc[:, 1:].apply(pd.to_numeric, errors="raise").to_numpy(dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric feature value ({exc})") from exc
    bad_rows = np.flatnonzero(~np.all(np.isfinite(values), axis=1))
    if bad_rows.size:
        raise ParseError("missing or non-finite feature value", int(bad_rows[0]) + 1)
    return {sid: values[i].copy() for i, sid in enumerate(ids)}


def load_records(
    ratings_path: str | Path, features_path: str | Path | None = None
) -> RatingRecordSet:
    records = load_ratings(ratings_path)
    if features_path is None:
        return records
    return records.with_features(load_features(features_path))


def save_ratings(records: RatingRecordSet, path: str | Path) -> Path:
    rows = [(sid, r) for sid, values in records.ratings.items() for r in values]
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=list(RATING_COLUMNS)).to_csv(target, index=False)
    return target


def save_features(features: Mapping[str, NDArray[np.float64]], path: str | Path) -> Path:
    ids = list(features)
    matrix = np.vstack([features[sid] for sid in ids])
    frame = pd.DataFrame(matrix, columns=[f"f{i}" for i in range(matrix.shape[1])])
    frame.insert(0, "sample_id", ids)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    # %.17g round-trips every float64 exactly.
    frame.to_csv(target, index=False, float_format="%.17g")
    return target
