import math

import numpy as np
import pytest
from scipy import integrate

from dual_ldl.core.distributions import (
    DEFAULT_GRID,
    MIN_SCALE,
    SUPPORTED_DELTA_L,
    AttractivenessDistribution,
    DistributionGrid,
    LaplaceParams,
    RatingDistribution,
    build_attractiveness_distribution,
    build_rating_distribution,
    derive_rating_distribution,
    gaussian_cdf,
    laplace_cdf,
    raw_bin_masses,
    regress_score,
    sigmoid_normalize,
    sigmoid_normalize_backward,
)
from dual_ldl.errors import (
    InvalidArgumentError,
    InvalidRatingError,
    NoRatersError,
    OutOfRangeError,
    ShapeError,
)
from dual_ldl.models import DistributionFamily


# ── Grid ─────────────────────────────────────────────────────────────────────


def test_default_grid_layout():
    grid = DistributionGrid()
    assert grid.n_bins == 40
    assert grid.endpoints[0] == 1.0
    assert grid.endpoints[-1] == 5.0
    assert np.all(np.diff(grid.endpoints) > 0)
    np.testing.assert_allclose(grid.endpoints, 1.0 + 0.1 * np.arange(41), atol=1e-12)
    np.testing.assert_allclose(grid.midpoints, (grid.endpoints[:-1] + grid.endpoints[1:]) / 2)
    assert grid.midpoints[0] == pytest.approx(1.05)
    assert grid.midpoints[-1] == pytest.approx(4.95)


def test_grid_arrays_are_read_only():
    with pytest.raises(ValueError):
        DEFAULT_GRID.midpoints[0] = 0.0


def test_default_rating_ranges_match_the_published_mapping():
    assert DEFAULT_GRID.rating_ranges() == [(0, 4), (5, 14), (15, 24), (25, 34), (35, 39)]


@pytest.mark.parametrize("delta_l", SUPPORTED_DELTA_L)
def test_rating_ranges_partition_every_grid(delta_l):
    grid = DistributionGrid(delta_l=delta_l)
    covered = []
    for lo, hi in grid.rating_ranges():
        covered.extend(range(lo, hi + 1))
    assert covered == list(range(grid.n_bins))
    assert grid.rating_matrix.sum(axis=1).tolist() == [1.0] * grid.n_bins


def test_unsupported_delta_l_is_rejected():
    with pytest.raises(InvalidArgumentError):
        DistributionGrid(delta_l=0.3)


@pytest.mark.parametrize(
    ("score", "index"), [(1.0, 0), (1.05, 0), (1.1, 1), (3.0, 20), (4.95, 39), (5.0, 39)]
)
def test_bin_index_boundaries(score, index):
    assert DEFAULT_GRID.bin_index(score) == index


def test_bin_index_out_of_range():
    with pytest.raises(OutOfRangeError):
        DEFAULT_GRID.bin_index(5.01)


# ── CDFs ─────────────────────────────────────────────────────────────────────


@pytest.mark.parametrize(
    ("x", "expected"),
    [(3.0, 0.5), (3.1, 1 - 0.5 * math.exp(-1)), (2.9, 0.5 * math.exp(-1))],
)
def test_laplace_cdf_closed_form(x, expected):
    assert laplace_cdf(x, LaplaceParams(mu=3.0, b=0.1)) == pytest.approx(expected, abs=1e-12)


def test_laplace_cdf_is_monotone():
    xs = np.linspace(0.0, 6.0, 301)
    values = laplace_cdf(xs, LaplaceParams(mu=2.7, b=0.4))
    assert np.all(np.diff(values) >= 0)
    assert laplace_cdf(2.7, LaplaceParams(mu=2.7, b=0.4)) == 0.5


def test_laplace_cdf_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        laplace_cdf(float("nan"), LaplaceParams(mu=3.0, b=0.1))


def test_laplace_params_clamp_zero_spread():
    assert LaplaceParams.from_moments(4.0, 0.0).b == MIN_SCALE
    assert LaplaceParams.from_moments(3.0, 0.1 * math.sqrt(2)).b == pytest.approx(0.1)


@pytest.mark.parametrize(
    ("x", "sigma", "expected"), [(2.0, 0.7, 0.5), (3.0, 1.0, 0.8413447), (0.0, 1.0, 0.0227501)]
)
def test_gaussian_cdf_reference_values(x, sigma, expected):
    assert gaussian_cdf(x, 2.0, sigma) == pytest.approx(expected, abs=1e-7)


def test_gaussian_cdf_rejects_non_positive_sigma():
    with pytest.raises(InvalidArgumentError):
        gaussian_cdf(1.0, 1.0, 0.0)


def test_bin_masses_match_quadrature_of_the_density():
    rng = np.random.default_rng(11)
    for _ in range(50):
        mu = rng.uniform(1.0, 5.0)
        b = rng.uniform(0.05, 1.0)
        j = int(rng.integers(0, 40))
        lo, hi = DEFAULT_GRID.endpoints[j], DEFAULT_GRID.endpoints[j + 1]
        expected, _ = integrate.quad(
            lambda x, mu=mu, b=b: math.exp(-abs(x - mu) / b) / (2 * b),
            lo,
            hi,
            points=[mu] if lo < mu < hi else None,
        )
        masses = raw_bin_masses(mu, b * math.sqrt(2))
        assert masses[j] == pytest.approx(expected, abs=1e-8)


# ── Rating distribution ──────────────────────────────────────────────────────


@pytest.mark.parametrize(
    ("ratings", "expected"),
    [
        ([3, 3, 4, 5, 3, 4], [0, 0, 0.5, 1 / 3, 1 / 6]),
        ([1, 1, 1], [1, 0, 0, 0, 0]),
        ([1, 2, 3, 4, 5], [0.2] * 5),
    ],
)
def test_build_rating_distribution(ratings, expected):
    r = build_rating_distribution(ratings)
    np.testing.assert_allclose(r.probs, expected, atol=1e-15)
    assert float(np.dot([1, 2, 3, 4, 5], r.probs)) == pytest.approx(np.mean(ratings), abs=1e-12)


def test_build_rating_distribution_errors():
    with pytest.raises(NoRatersError):
        build_rating_distribution([])
    with pytest.raises(InvalidRatingError):
        build_rating_distribution([3, 6])
    with pytest.raises(InvalidRatingError):
        build_rating_distribution([2.5])


def test_distribution_wrappers_validate():
    with pytest.raises(InvalidArgumentError):
        RatingDistribution(probs=np.array([0.5, 0.5, 0.5, 0.0, 0.0]))
    with pytest.raises(ShapeError):
        AttractivenessDistribution(probs=np.ones((2, 20)) / 40)


def test_distribution_wrapper_copies_input():
    probs = np.full(5, 0.2)
    r = RatingDistribution(probs=probs)
    probs[0] = 9.0
    assert r.probs[0] == 0.2
    assert probs.flags.writeable


# ── Attractiveness distribution ──────────────────────────────────────────────


def test_raw_bin_mass_example():
    masses = raw_bin_masses(3.0, 0.1 * math.sqrt(2))
    assert masses[20] == pytest.approx(0.5 - 0.5 * math.exp(-1), abs=1e-12)


def test_attractiveness_distribution_example_matches_independent_pipeline():
    raw = raw_bin_masses(3.0, 0.1 * math.sqrt(2))
    expected = 1 / (1 + np.exp(-raw))
    expected /= expected.sum()
    p = build_attractiveness_distribution(3.0, 0.1 * math.sqrt(2))
    np.testing.assert_allclose(p.probs, expected, rtol=1e-12)


def test_point_mass_at_the_lower_edge():
    p = build_attractiveness_distribution(1.0, 0.0)
    assert int(np.argmax(p.probs)) == 0


def test_randomized_constructions_are_normalized():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        grid = DistributionGrid(delta_l=float(rng.choice(SUPPORTED_DELTA_L)))
        family = DistributionFamily.GAUSSIAN if rng.random() < 0.5 else DistributionFamily.LAPLACE
        p = build_attractiveness_distribution(
            float(rng.uniform(1.0, 5.0)), float(rng.uniform(0.0, 2.0)), grid, family
        )
        assert p.probs.shape == (grid.n_bins,)
        assert np.all(p.probs >= 0)
        assert abs(p.probs.sum() - 1.0) < 1e-9


def test_sigmoid_normalization_preserves_order():
    raw = raw_bin_masses(2.33, 0.8)
    p = sigmoid_normalize(raw)
    np.testing.assert_array_equal(np.argsort(raw, kind="stable"), np.argsort(p, kind="stable"))


def test_families_differ_for_spread_ratings():
    laplace = build_attractiveness_distribution(3.2, 0.7, family=DistributionFamily.LAPLACE)
    gaussian = build_attractiveness_distribution(3.2, 0.7, family=DistributionFamily.GAUSSIAN)
    assert not np.allclose(laplace.probs, gaussian.probs)


def test_gaussian_zero_spread_is_clamped(mocker):
    log = mocker.patch("dual_ldl.core.distributions.log")
    p = build_attractiveness_distribution(4.0, 0.0, family=DistributionFamily.GAUSSIAN)
    assert np.isfinite(p.probs).all()
    assert abs(p.probs.sum() - 1.0) < 1e-9
    log.warning.assert_called_once_with("gaussian_scale_clamped", sigma=0.0, clamped=MIN_SCALE)


def test_laplace_zero_spread_clamp_is_logged(mocker):
    log = mocker.patch("dual_ldl.core.distributions.log")
    build_attractiveness_distribution(2.0, 0.0)
    assert log.warning.call_args.args == ("laplace_scale_clamped",)


def test_head_survives_underflowing_logits():
    z = np.full((2, 40), -800.0)
    z[0, 0] = -790.0
    p = sigmoid_normalize(z)
    assert np.isfinite(p).all()
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(p[1], 1 / 40)
    assert p[0, 0] > 0.99
    grad = sigmoid_normalize_backward(z, np.linspace(0.0, 1.0, 40)[None, :].repeat(2, axis=0))
    assert np.isfinite(grad).all()


def test_head_backward_matches_the_ratio_form():
    rng = np.random.default_rng(12)
    z = rng.normal(0.0, 2.0, size=(4, 40))
    g = rng.normal(size=z.shape)
    u = 1 / (1 + np.exp(-z))
    total = u.sum(axis=1, keepdims=True)
    expected = u * (1 - u) / total * (g - (g * u / total).sum(axis=1, keepdims=True))
    np.testing.assert_allclose(sigmoid_normalize_backward(z, g), expected, rtol=1e-10)
    np.testing.assert_allclose(sigmoid_normalize(z), u / total, rtol=1e-12)


def test_out_of_range_score():
    with pytest.raises(OutOfRangeError):
        build_attractiveness_distribution(5.5, 0.3)
    with pytest.raises(InvalidArgumentError):
        build_attractiveness_distribution(3.0, -0.1)


def test_coarser_grid_width():
    p = build_attractiveness_distribution(3.0, 0.5, DistributionGrid(delta_l=0.2))
    assert p.probs.shape == (20,)


# ── Derived rating distribution and score regression ─────────────────────────


def test_derive_rating_distribution_examples():
    uniform = np.full(40, 1 / 40)
    np.testing.assert_allclose(
        derive_rating_distribution(uniform), [0.125, 0.25, 0.25, 0.25, 0.125], atol=1e-15
    )
    np.testing.assert_array_equal(derive_rating_distribution(np.eye(40)[20]), [0, 0, 1, 0, 0])
    np.testing.assert_array_equal(derive_rating_distribution(np.eye(40)[4]), [1, 0, 0, 0, 0])


def test_derive_rating_distribution_preserves_mass():
    rng = np.random.default_rng(5)
    p = sigmoid_normalize(rng.normal(0.0, 3.0, size=(1000, 40)))
    r_hat = derive_rating_distribution(p)
    np.testing.assert_allclose(r_hat.sum(axis=1), p.sum(axis=1), atol=1e-14)


def test_derive_rating_distribution_width_mismatch():
    with pytest.raises(ShapeError):
        derive_rating_distribution(np.full(20, 1 / 20))


def test_regress_score_examples():
    assert regress_score(np.eye(40)[20]) == pytest.approx(3.05)
    assert regress_score(np.full(40, 1 / 40)) == pytest.approx(3.0)
    two_point = np.zeros(40)
    two_point[[0, 39]] = 0.5
    assert regress_score(two_point) == pytest.approx(3.0)


def test_regress_score_stays_within_midpoints():
    rng = np.random.default_rng(8)
    scores = regress_score(sigmoid_normalize(rng.normal(0.0, 5.0, size=(500, 40))))
    assert np.all(scores >= 1.05 - 1e-12)
    assert np.all(scores <= 4.95 + 1e-12)
