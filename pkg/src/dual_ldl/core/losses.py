"""Joint loss of the dual label distribution learner and its analytic gradient.

Implements:
- loss_ad: mean Euclidean distance between predicted and target attractiveness distributions
- loss_rd: the same distance on the derived rating distributions
- loss_score: Σ [exp(|ŷ − y|) − 1] over the batch (optionally averaged)
- joint_loss: λ₁·L_ad + λ₂·L_rd + λ₃·L_score
- joint_loss_and_grad / joint_loss_backward: the same, plus ∂L/∂p̂ and ∂L/∂logits
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from dual_ldl.core.distributions import (
    DistributionGrid,
    derive_rating_distribution,
    regress_score,
    sigmoid_normalize,
    sigmoid_normalize_backward,
)
from dual_ldl.errors import NumericError, ShapeError
from dual_ldl.models.training import LossWeights, ScoreReduction

MAX_SCORE_ERROR = 30.0

# (pred, target) -> (loss value, ∂loss/∂pred)
DistributionTerm = Callable[
    [NDArray[np.float64], NDArray[np.float64]], tuple[float, NDArray[np.float64]]
]


@dataclass(frozen=True)
class LossBreakdown:
    """Component losses of one batch and their weighted total."""

    l_ad: float
    l_rd: float
    l_score: float
    total: float

    def components(self) -> dict[str, float]:
        return {"l_ad": self.l_ad, "l_rd": self.l_rd, "l_score": self.l_score, "total": self.total}


@dataclass(frozen=True)
class LossTargets:
    """Ground truth of a batch: p (n, K), r (n, 5) and y (n,)."""

    p: NDArray[np.float64]
    r: NDArray[np.float64]
    y: NDArray[np.float64]

    def __post_init__(self) -> None:
        n = self.y.shape[0]
        if self.p.ndim != 2 or self.r.ndim != 2 or self.p.shape[0] != n or self.r.shape[0] != n:
            raise ShapeError("targets p, r and y must share one batch dimension")


def _pair(pred: ArrayLike, target: ArrayLike, name: str) -> tuple[NDArray[np.float64], ...]:
    a = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    b = np.atleast_2d(np.asarray(target, dtype=np.float64))
    if a.shape != b.shape or a.shape[0] == 0:
        raise ShapeError(f"{name}: prediction {a.shape} and target {b.shape} must match, n >= 1")
    return a, b


def euclidean_term(
    pred: NDArray[np.float64], target: NDArray[np.float64]
) -> tuple[float, NDArray[np.float64]]:
    """(1/n) Σ ‖pred − target‖₂ and its gradient w.r.t. pred.

    The gradient of a zero residual is the zero vector.
    """
    diff = pred - target
    norms = np.sqrt(np.sum(diff * diff, axis=1))
    n = pred.shape[0]
    safe = np.where(norms > 0.0, norms, 1.0)
    grad = np.where(norms[:, None] > 0.0, diff / safe[:, None], 0.0) / n
    return float(norms.mean()), grad


def _check_finite(term: str, *values: float | NDArray[np.float64]) -> None:
    for value in values:
        if not np.all(np.isfinite(value)):
            raise NumericError(term)


def loss_ad(pred: ArrayLike, target: ArrayLike) -> float:
    """L_ad = (1/n) Σ ‖p̂⁽ⁱ⁾ − p⁽ⁱ⁾‖₂."""
    value, _ = euclidean_term(*_pair(pred, target, "loss_ad"))
    return value


def loss_rd(pred: ArrayLike, target: ArrayLike) -> float:
    """L_rd = (1/n) Σ ‖r̂⁽ⁱ⁾ − r⁽ⁱ⁾‖₂."""
    value, _ = euclidean_term(*_pair(pred, target, "loss_rd"))
    return value


def score_term(
    pred: NDArray[np.float64], target: NDArray[np.float64], reduction: ScoreReduction
) -> tuple[float, NDArray[np.float64]]:
    """Score loss of a batch and its gradient w.r.t. the predicted scores.

    Errors are clamped at MAX_SCORE_ERROR before exponentiation.
    """
    err = pred - target
    clamped = np.minimum(np.abs(err), MAX_SCORE_ERROR)
    values = np.expm1(clamped)
    grad = np.sign(err) * np.exp(clamped)
    if reduction is ScoreReduction.MEAN:
        return float(values.mean()), grad / pred.shape[0]
    return float(values.sum()), grad


def loss_score(
    pred: ArrayLike, target: ArrayLike, reduction: ScoreReduction = ScoreReduction.SUM
) -> float:
    """L_score = Σ [exp(|ŷ⁽ⁱ⁾ − y⁽ⁱ⁾|) − 1]; a sum over the batch unless ``reduction`` is mean."""
    a = np.asarray(pred, dtype=np.float64).ravel()
    b = np.asarray(target, dtype=np.float64).ravel()
    if a.shape != b.shape or a.size == 0:
        raise ShapeError(
            f"loss_score: prediction {a.shape} and target {b.shape} must match, n >= 1"
        )
    value, _ = score_term(a, b, reduction)
    return value


def joint_loss(l_ad: float, l_rd: float, l_score: float, weights: LossWeights) -> LossBreakdown:
    """L = λ₁·L_ad + λ₂·L_rd + λ₃·L_score."""
    total = weights.lambda_ad * l_ad + weights.lambda_rd * l_rd + weights.lambda_score * l_score
    return LossBreakdown(l_ad=l_ad, l_rd=l_rd, l_score=l_score, total=total)


def joint_loss_and_grad(
    p_hat: NDArray[np.float64],
    targets: LossTargets,
    grid: DistributionGrid,
    weights: LossWeights,
    reduction: ScoreReduction = ScoreReduction.SUM,
    distribution_term: DistributionTerm = euclidean_term,
) -> tuple[LossBreakdown, NDArray[np.float64]]:
    """Joint loss of predicted distributions and its gradient w.r.t. p̂.

    All three components are always evaluated so they can be logged; only
    terms with a nonzero weight contribute to the gradient.

    Args:
        p_hat: (n, K) predicted attractiveness distributions.
        targets: Ground-truth p, r and y of the same n samples.
        grid: Score intervals that define r̂ and ŷ.
        weights: Joint-loss weights.
        reduction: Batch reduction of the score term.
        distribution_term: Loss used for the AD and RD terms.

    Returns:
        (LossBreakdown, ∂L/∂p̂ of shape (n, K)).
    """
    p_pred, p_true = _pair(p_hat, targets.p, "attractiveness distribution")
    r_hat = derive_rating_distribution(p_pred, grid)
    r_pred, r_true = _pair(r_hat, targets.r, "rating distribution")
    y_pred = np.asarray(regress_score(p_pred, grid), dtype=np.float64).ravel()
    if y_pred.shape != targets.y.shape:
        raise ShapeError("score targets do not match the batch")

    l_ad, g_ad = distribution_term(p_pred, p_true)
    _check_finite("l_ad", l_ad, g_ad)
    l_rd, g_rd = distribution_term(r_pred, r_true)
    _check_finite("l_rd", l_rd, g_rd)
    l_score, g_score = score_term(y_pred, targets.y, reduction)
    _check_finite("l_score", l_score, g_score)

    grad = np.zeros_like(p_pred)
    if weights.lambda_ad:
        grad += weights.lambda_ad * g_ad
    if weights.lambda_rd:
        # Each bin receives the gradient of the rating it is summed into.
        grad += weights.lambda_rd * (g_rd @ grid.rating_matrix.T)
    if weights.lambda_score:
        grad += weights.lambda_score * g_score[:, None] * grid.midpoints[None, :]
    return joint_loss(l_ad, l_rd, l_score, weights), grad


def joint_loss_backward(
    logits: ArrayLike,
    targets: LossTargets,
    grid: DistributionGrid,
    weights: LossWeights,
    reduction: ScoreReduction = ScoreReduction.SUM,
    distribution_term: DistributionTerm = euclidean_term,
) -> NDArray[np.float64]:
    """∂L/∂logits through the sigmoid + L1 head, for (n, K) pre-activation outputs."""
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    _check_finite("logits", z)
    _, grad_p = joint_loss_and_grad(
        sigmoid_normalize(z), targets, grid, weights, reduction, distribution_term
    )
    grad_z = sigmoid_normalize_backward(z, grad_p)
    _check_finite("head", grad_z)
    return grad_z
