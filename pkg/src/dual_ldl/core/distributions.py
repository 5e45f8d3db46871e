"""Dual label distribution construction.

Implements:
- DistributionGrid: score interval endpoints, midpoints and the interval-to-rating map
- laplace_cdf / gaussian_cdf: the two CDF families used to discretize a score law
- build_rating_distribution: normalized rating counts r
- build_attractiveness_distribution: binned CDF masses, sigmoid, L1 normalization -> p
- derive_rating_distribution: r̂ from p̂ by summing the bins of each rating
- regress_score: ŷ as the midpoint-weighted expectation of p̂
- sigmoid_normalize (+ backward): the head shared by targets and network outputs
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray
from scipy import stats
from scipy.special import expit, log_expit, softmax

from dual_ldl.errors import (
    InvalidArgumentError,
    InvalidRatingError,
    NoRatersError,
    OutOfRangeError,
    ShapeError,
)
from dual_ldl.models.training import DistributionFamily

log = structlog.get_logger(__name__)

SUPPORTED_DELTA_L: tuple[float, ...] = (0.01, 0.05, 0.1, 0.2, 0.5)
MIN_SCALE = 1e-6
RATINGS: tuple[int, ...] = (1, 2, 3, 4, 5)
NORMALIZATION_TOL = 1e-9


def _frozen(arr: NDArray[np.float64]) -> NDArray[np.float64]:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DistributionGrid:
    """Score intervals I_j = [s_j, s_{j+1}) over [y_min, y_max].

    Every interval is half-open except the last, which also holds y_max.
    """

    y_min: float = 1.0
    y_max: float = 5.0
    delta_l: float = 0.1
    n_bins: int = field(init=False)

    def __post_init__(self) -> None:
        if not any(math.isclose(self.delta_l, d) for d in SUPPORTED_DELTA_L):
            raise InvalidArgumentError(
                f"delta_l {self.delta_l} is not one of {list(SUPPORTED_DELTA_L)}"
            )
        if not self.y_max > self.y_min:
            raise InvalidArgumentError("y_max must exceed y_min")
        span = (self.y_max - self.y_min) / self.delta_l
        n_bins = round(span)
        if not math.isclose(span, n_bins, abs_tol=1e-9):
            raise InvalidArgumentError(
                f"delta_l {self.delta_l} does not divide [{self.y_min}, {self.y_max}] evenly"
            )
        object.__setattr__(self, "n_bins", n_bins)

    @cached_property
    def endpoints(self) -> NDArray[np.float64]:
        """s_0..s_K with s_k = y_min + k·Δl."""
        ends = self.y_min + np.arange(self.n_bins + 1, dtype=np.float64) * self.delta_l
        ends[-1] = self.y_max
        return _frozen(ends)

    @cached_property
    def midpoints(self) -> NDArray[np.float64]:
        """w_j = (s_j + s_{j+1}) / 2."""
        ends = self.endpoints
        return _frozen((ends[:-1] + ends[1:]) / 2.0)

    @cached_property
    def bin_ratings(self) -> NDArray[np.int64]:
        """Rating m owning each bin: the bin whose midpoint falls in [m−0.5, m+0.5)."""
        # The epsilon keeps midpoints sitting exactly on a half-integer on the upper side.
        ratings = np.floor(self.midpoints + 0.5 + 1e-9).astype(np.int64)
        ratings = np.clip(ratings, RATINGS[0], RATINGS[-1])
        ratings.setflags(write=False)
        return ratings

    @cached_property
    def rating_matrix(self) -> NDArray[np.float64]:
        """(n_bins, 5) indicator matrix; p @ rating_matrix gives r̂."""
        matrix = np.zeros((self.n_bins, len(RATINGS)), dtype=np.float64)
        matrix[np.arange(self.n_bins), self.bin_ratings - 1] = 1.0
        return _frozen(matrix)

    def rating_ranges(self) -> list[tuple[int, int]]:
        """Inclusive bin index range [lo, hi] of each rating 1..5."""
        ranges = []
        for m in RATINGS:
            idx = np.flatnonzero(self.bin_ratings == m)
            ranges.append((int(idx[0]), int(idx[-1])))
        return ranges

    def bin_index(self, score: float) -> int:
        """Index j of the interval holding ``score``."""
        _check_score(score, self)
        j = int(np.searchsorted(self.endpoints, score, side="right")) - 1
        return min(j, self.n_bins - 1)


DEFAULT_GRID = DistributionGrid()


@dataclass(frozen=True)
class LaplaceParams:
    """Location μ and scale b of a Laplace law."""

    mu: float
    b: float

    @classmethod
    def from_moments(cls, mean: float, std: float) -> LaplaceParams:
        """μ = mean, b = std/√2, with b clamped to MIN_SCALE for unanimous raters."""
        b = std / math.sqrt(2.0)
        if b < MIN_SCALE:
            log.warning("laplace_scale_clamped", std=std, b=MIN_SCALE)
            b = MIN_SCALE
        return cls(mu=mean, b=b)


@dataclass(frozen=True)
class RatingDistribution:
    """Probabilities r_1..r_5 of the five integer ratings."""

    probs: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "probs", _check_distribution(self.probs, len(RATINGS), "rating distribution")
        )

    def __array__(self, dtype: object = None, copy: object = None) -> NDArray[np.float64]:
        return np.asarray(self.probs, dtype=dtype)  # type: ignore[call-overload]


@dataclass(frozen=True)
class AttractivenessDistribution:
    """Probabilities p_j of the score intervals I_j."""

    probs: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "probs", _check_distribution(self.probs, None, "attractiveness distribution")
        )

    def __array__(self, dtype: object = None, copy: object = None) -> NDArray[np.float64]:
        return np.asarray(self.probs, dtype=dtype)  # type: ignore[call-overload]


def _check_distribution(probs: ArrayLike, width: int | None, name: str) -> NDArray[np.float64]:
    arr = np.array(probs, dtype=np.float64)
    if arr.ndim != 1 or (width is not None and arr.shape[0] != width):
        raise ShapeError(f"{name} must be a vector of length {width or 'n_bins'}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidArgumentError(f"{name} has negative or non-finite entries")
    if abs(float(arr.sum()) - 1.0) > NORMALIZATION_TOL:
        raise InvalidArgumentError(f"{name} sums to {arr.sum()!r}, not 1")
    return _frozen(arr)


def _check_score(score: float, grid: DistributionGrid) -> None:
    if not math.isfinite(score):
        raise InvalidArgumentError(f"score {score!r} is not finite")
    if not grid.y_min <= score <= grid.y_max:
        raise OutOfRangeError(f"score {score} outside [{grid.y_min}, {grid.y_max}]")


def laplace_cdf(x: ArrayLike, params: LaplaceParams) -> NDArray[np.float64]:
    """F(x|μ,b) = ½[1 + sgn(x−μ)(1 − exp(−|x−μ|/b))]."""
    x_arr = np.asarray(x, dtype=np.float64)
    if not (np.all(np.isfinite(x_arr)) and math.isfinite(params.mu) and math.isfinite(params.b)):
        raise InvalidArgumentError("laplace_cdf needs finite x, mu and b")
    if params.b <= 0:
        raise InvalidArgumentError(f"Laplace scale must be positive, got {params.b}")
    return np.asarray(stats.laplace.cdf(x_arr, loc=params.mu, scale=params.b), dtype=np.float64)


def gaussian_cdf(x: ArrayLike, mu: float, sigma: float) -> NDArray[np.float64]:
    """Normal CDF evaluated at (x − mu) / sigma."""
    x_arr = np.asarray(x, dtype=np.float64)
    if not (np.all(np.isfinite(x_arr)) and math.isfinite(mu) and math.isfinite(sigma)):
        raise InvalidArgumentError("gaussian_cdf needs finite x, mu and sigma")
    if sigma <= 0:
        raise InvalidArgumentError(f"Gaussian sigma must be positive, got {sigma}")
    return np.asarray(stats.norm.cdf(x_arr, loc=mu, scale=sigma), dtype=np.float64)


def build_rating_distribution(ratings: Sequence[int] | NDArray[np.int64]) -> RatingDistribution:
    """r_m = count(rating == m) / total."""
    values = np.asarray(ratings)
    if values.size == 0:
        raise NoRatersError("a sample needs at least one rating")
    if values.dtype.kind not in "iuf" or values.dtype == np.bool_:
        raise InvalidRatingError(f"ratings must be integers, got dtype {values.dtype}")
    if values.dtype.kind == "f" and not np.all(values == np.round(values)):
        raise InvalidRatingError("ratings must be integers")
    ints = values.astype(np.int64)
    bad = ints[(ints < RATINGS[0]) | (ints > RATINGS[-1])]
    if bad.size:
        raise InvalidRatingError(f"rating {int(bad[0])} outside 1..5")
    counts = np.bincount(ints - 1, minlength=len(RATINGS)).astype(np.float64)
    return RatingDistribution(probs=counts / counts.sum())


def raw_bin_masses(
    y: float,
    sigma: float,
    grid: DistributionGrid | None = None,
    family: DistributionFamily = DistributionFamily.LAPLACE,
) -> NDArray[np.float64]:
    """F(s_{j+1}) − F(s_j) for every bin, before sigmoid and normalization."""
    grid = grid or DEFAULT_GRID
    _check_score(y, grid)
    if not math.isfinite(sigma) or sigma < 0:
        raise InvalidArgumentError(f"sigma must be a finite non-negative number, got {sigma}")
    if family is DistributionFamily.LAPLACE:
        cdf = laplace_cdf(grid.endpoints, LaplaceParams.from_moments(y, sigma))
    else:
        if sigma < MIN_SCALE:
            log.warning("gaussian_scale_clamped", sigma=sigma, clamped=MIN_SCALE)
            sigma = MIN_SCALE
        cdf = gaussian_cdf(grid.endpoints, y, sigma)
    return np.diff(cdf)


def sigmoid_normalize(raw: ArrayLike) -> NDArray[np.float64]:
    """Elementwise sigmoid followed by L1 normalization along the last axis.

    Computed as a softmax of log σ(z), which stays finite when every σ(z) underflows.
    """
    z = np.asarray(raw, dtype=np.float64)
    return np.asarray(softmax(log_expit(z), axis=-1), dtype=np.float64)


def sigmoid_normalize_backward(raw: ArrayLike, grad_out: ArrayLike) -> NDArray[np.float64]:
    """Gradient w.r.t. ``raw`` of a scalar whose gradient w.r.t. the head output is ``grad_out``.

    With u = σ(z), S = Σu and p = u/S: ∂p_a/∂z_c = p_c(1−u_c) · (δ_ac − p_a).
    """
    z = np.asarray(raw, dtype=np.float64)
    g = np.asarray(grad_out, dtype=np.float64)
    if z.shape != g.shape:
        raise ShapeError(f"head input {z.shape} and gradient {g.shape} differ")
    p = sigmoid_normalize(z)
    inner = (g * p).sum(axis=-1, keepdims=True)
    return np.asarray(p * expit(-z) * (g - inner), dtype=np.float64)


def build_attractiveness_distribution(
    y: float,
    sigma: float,
    grid: DistributionGrid | None = None,
    family: DistributionFamily = DistributionFamily.LAPLACE,
) -> AttractivenessDistribution:
    """Bin the score law of one sample, then apply sigmoid and L1 normalization.

    Args:
        y: Ground-truth score, the location of the law.
        sigma: Standard deviation of the ratings. Laplace uses b = σ/√2.
        grid: Score intervals; defaults to Δl = 0.1 over [1, 5].
        family: Laplace (default) or Gaussian CDF.

    Returns:
        AttractivenessDistribution with grid.n_bins entries summing to 1.
    """
    raw = raw_bin_masses(y, sigma, grid, family)
    return AttractivenessDistribution(probs=sigmoid_normalize(raw))


def _grid_for(p: NDArray[np.float64], grid: DistributionGrid | None) -> DistributionGrid:
    grid = grid or DEFAULT_GRID
    if p.shape[-1] != grid.n_bins:
        raise ShapeError(f"distribution width {p.shape[-1]} != grid bins {grid.n_bins}")
    return grid


def derive_rating_distribution(
    p: ArrayLike, grid: DistributionGrid | None = None
) -> NDArray[np.float64]:
    """r̂_m = Σ p_j over the bins of rating m; accepts one vector or a batch."""
    p_arr = np.asarray(p, dtype=np.float64)
    grid = _grid_for(p_arr, grid)
    return np.asarray(p_arr @ grid.rating_matrix, dtype=np.float64)


def regress_score(
    p: ArrayLike, grid: DistributionGrid | None = None
) -> float | NDArray[np.float64]:
    """ŷ = Σ_j w_j p_j; a float for one vector, an array of scores for a batch."""
    p_arr = np.asarray(p, dtype=np.float64)
    grid = _grid_for(p_arr, grid)
    scores = p_arr @ grid.midpoints
    if p_arr.ndim == 1:
        return float(scores)
    return np.asarray(scores, dtype=np.float64)
