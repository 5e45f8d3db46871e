import numpy as np
import pytest

from dual_ldl.data.ratings import (
    RatingRecordSet,
    load_features,
    load_ratings,
    load_records,
    save_features,
    save_ratings,
)
from dual_ldl.errors import (
    EmptyDatasetError,
    InvalidRatingError,
    NoRatersError,
    ParseError,
    ShapeError,
)


def test_load_ratings_groups_rows_by_sample(write_csv):
    path = write_csv("ratings.csv", "sample_id,rating\nimg1,4\nimg1,5\nimg2,3\n")
    records = load_ratings(path)
    assert records.ratings == {"img1": (4, 5), "img2": (3,)}
    assert records.sample_ids == ["img1", "img2"]
    assert len(records) == 2
    assert records.features is None
    assert records.feature_width is None


def test_load_ratings_accepts_rater_column(write_csv):
    path = write_csv("ratings.csv", "sample_id,rating,rater_id\na,1,r1\na,2,r2\nb,5,r1\n")
    assert load_ratings(path).ratings == {"a": (1, 2), "b": (5,)}


def test_header_only_file_is_empty(write_csv):
    with pytest.raises(EmptyDatasetError):
        load_ratings(write_csv("ratings.csv", "sample_id,rating\n"))


def test_blank_file_is_empty(write_csv):
    with pytest.raises(EmptyDatasetError):
        load_ratings(write_csv("ratings.csv", ""))


def test_out_of_range_rating_reports_its_line(write_csv):
    with pytest.raises(InvalidRatingError) as excinfo:
        load_ratings(write_csv("ratings.csv", "sample_id,rating\nimg1,6\n"))
    assert excinfo.value.line == 1
    assert "line 1" in str(excinfo.value)


def test_non_integer_rating(write_csv):
    with pytest.raises(ParseError) as excinfo:
        load_ratings(write_csv("ratings.csv", "sample_id,rating\na,3\na,four\n"))
    assert excinfo.value.line == 2


def test_duplicate_rater_is_rejected(write_csv):
    text = "sample_id,rating,rater_id\na,3,r1\nb,4,r1\na,2,r1\n"
    with pytest.raises(ParseError) as excinfo:
        load_ratings(write_csv("ratings.csv", text))
    assert excinfo.value.line == 3


def test_invalid_utf8_is_a_parse_error(tmp_path):
    ratings = tmp_path / "ratings.csv"
    ratings.write_bytes(b"sample_id,rating\nimg\xff1,4\n")
    with pytest.raises(ParseError, match="not UTF-8"):
        load_ratings(ratings)
    features = tmp_path / "features.csv"
    features.write_bytes(b"sample_id,f0\n\xfe\xfe,1\n")
    with pytest.raises(ParseError):
        load_features(features)


def test_wrong_header(write_csv):
    with pytest.raises(ParseError):
        load_ratings(write_csv("ratings.csv", "id,score\na,3\n"))


def test_record_set_validation():
    with pytest.raises(NoRatersError):
        RatingRecordSet(ratings={"a": ()})
    with pytest.raises(InvalidRatingError):
        RatingRecordSet(ratings={"a": (0,)})
    with pytest.raises(ShapeError):
        RatingRecordSet(ratings={"a": (3,), "b": (4,)}, features={"a": np.zeros(2)})
    with pytest.raises(ShapeError):
        RatingRecordSet(
            ratings={"a": (3,), "b": (4,)}, features={"a": np.zeros(2), "b": np.zeros(3)}
        )


def test_load_features(write_csv):
    path = write_csv("features.csv", "sample_id,f0,f1\na,0.5,-1\nb,2,3.25\n")
    features = load_features(path)
    assert list(features) == ["a", "b"]
    np.testing.assert_array_equal(features["b"], [2.0, 3.25])


def test_features_reject_duplicates_and_bad_values(write_csv):
    with pytest.raises(ParseError) as excinfo:
        load_features(write_csv("dup.csv", "sample_id,f0\na,1\nb,2\na,3\n"))
    assert excinfo.value.line == 3
    with pytest.raises(ParseError):
        load_features(write_csv("text.csv", "sample_id,f0\na,abc\n"))
    with pytest.raises(ParseError):
        load_features(write_csv("inf.csv", "sample_id,f0\na,1\nb,inf\n"))


def test_load_records_joins_features(write_csv):
    ratings = write_csv("ratings.csv", "sample_id,rating\na,3\nb,4\n")
    features = write_csv("features.csv", "sample_id,f0\nb,1\na,2\n")
    records = load_records(ratings, features)
    assert records.feature_width == 1
    np.testing.assert_array_equal(records.features["a"], [2.0])


def test_load_records_requires_features_for_every_sample(write_csv):
    ratings = write_csv("ratings.csv", "sample_id,rating\na,3\nb,4\n")
    features = write_csv("features.csv", "sample_id,f0\na,2\n")
    with pytest.raises(ShapeError):
        load_records(ratings, features)


def test_saved_files_load_back_exactly(tmp_path):
    rng = np.random.default_rng(1)
    features = {"x": rng.normal(size=3), "y": rng.normal(size=3)}
    records = RatingRecordSet(ratings={"x": (1, 5, 5), "y": (2,)}, features=features)
    save_ratings(records, tmp_path / "r.csv")
    save_features(features, tmp_path / "f.csv")
    loaded = load_records(tmp_path / "r.csv", tmp_path / "f.csv")
    assert loaded.ratings == records.ratings
    for sid in features:
        assert loaded.features[sid].tobytes() == features[sid].tobytes()
