"""Finite-difference verification of every analytic gradient in the package.

Each case draws a seeded random input, evaluates the analytic gradient and a
central-difference estimate, and compares them with the norm-wise relative
error ‖a − n‖ / max(‖a‖ + ‖n‖, 1e-12).
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import structlog
from numpy.typing import NDArray

from dual_ldl.core.distributions import DEFAULT_GRID, sigmoid_normalize, sigmoid_normalize_backward
from dual_ldl.core.losses import (
    LossTargets,
    euclidean_term,
    joint_loss_and_grad,
    joint_loss_backward,
    score_term,
)
from dual_ldl.core.net import PredictorNet
from dual_ldl.models.training import LossWeights, NetConfig, ScoreReduction
from dual_ldl.training.trainer import kl_term

log = structlog.get_logger(__name__)

CASE_KINDS = ("loss_ad", "loss_rd", "loss_score", "joint", "head", "net", "kl")
DEFAULT_CASES = 120
DEFAULT_TOLERANCE = 1e-4
STEP = 1e-5
BATCH = 3

Array = NDArray[np.float64]
# Returns (loss at x, analytic gradient at x, starting point x).
Problem = tuple[Callable[[Array], float], Array, Array]


@dataclass(frozen=True)
class GradCase:
    index: int
    kind: str
    seed: int
    rel_error: float
    passed: bool


@dataclass
class GradcheckSummary:
    tolerance: float
    cases: list[GradCase] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return max((c.rel_error for c in self.cases), default=0.0)

    @property
    def failures(self) -> list[GradCase]:
        return [c for c in self.cases if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures


def numeric_gradient(f: Callable[[Array], float], x: Array, step: float = STEP) -> Array:
    grad = np.zeros_like(x)
    shifted = x.copy()
    for i in range(x.size):
        orig = shifted.flat[i]
        shifted.flat[i] = orig + step
        upper = f(shifted)
        shifted.flat[i] = orig - step
        lower = f(shifted)
        shifted.flat[i] = orig
        grad.flat[i] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(analytic: Array, numeric: Array) -> float:
    scale = max(float(np.linalg.norm(analytic) + np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / scale


def _random_distributions(rng: np.random.Generator, width: int) -> Array:
    return sigmoid_normalize(rng.normal(0.0, 1.0, size=(BATCH, width)))


def _scores_away_from(rng: np.random.Generator, y: Array) -> Array:
    # Stay clear of the |e| = 0 kink and of the clamp.
    offset = rng.uniform(0.1, 1.5, size=y.shape) * rng.choice([-1.0, 1.0], size=y.shape)
    return y + offset


def _distance_problem(
    rng: np.random.Generator, width: int, term: Callable[..., tuple[float, Array]]
) -> Problem:
    target = _random_distributions(rng, width)
    x = _random_distributions(rng, width)
    return (lambda q: term(q, target)[0]), term(x, target)[1], x


def _score_problem(rng: np.random.Generator) -> Problem:
    reduction = ScoreReduction.SUM if rng.random() < 0.5 else ScoreReduction.MEAN
    x = rng.uniform(1.0, 5.0, size=BATCH)
    target = _scores_away_from(rng, x)
    return (lambda y: score_term(y, target, reduction)[0]), score_term(x, target, reduction)[1], x


def _random_targets(rng: np.random.Generator, p_hat: Array) -> LossTargets:
    grid = DEFAULT_GRID
    p = _random_distributions(rng, grid.n_bins)
    y_hat = p_hat @ grid.midpoints
    return LossTargets(p=p, r=p @ grid.rating_matrix, y=_scores_away_from(rng, y_hat))


def _random_weights(rng: np.random.Generator) -> LossWeights:
    a, b, c = rng.uniform(0.5, 2.0, size=3)
    return LossWeights(lambda_ad=a, lambda_rd=b, lambda_score=c)


def _joint_problem(rng: np.random.Generator) -> Problem:
    # Differentiates w.r.t. the logits, through the head.
    z = rng.normal(0.0, 1.0, size=(BATCH, DEFAULT_GRID.n_bins))
    targets = _random_targets(rng, sigmoid_normalize(z))
    weights = _random_weights(rng)
    reduction = ScoreReduction.SUM if rng.random() < 0.5 else ScoreReduction.MEAN

    def f(logits: Array) -> float:
        p = sigmoid_normalize(logits)
        return joint_loss_and_grad(p, targets, DEFAULT_GRID, weights, reduction)[0].total

    return f, joint_loss_backward(z, targets, DEFAULT_GRID, weights, reduction), z


def _head_problem(rng: np.random.Generator) -> Problem:
    x = rng.normal(0.0, 2.0, size=(BATCH, DEFAULT_GRID.n_bins))
    g = rng.normal(size=x.shape)
    return (lambda z: float(np.sum(g * sigmoid_normalize(z)))), sigmoid_normalize_backward(x, g), x


def _net_problem(rng: np.random.Generator, seed: int) -> Problem:
    config = NetConfig(input_dim=3, hidden_dims=[4], output_dim=DEFAULT_GRID.n_bins, seed=seed)
    net = PredictorNet.init(config)
    features = rng.normal(size=(BATCH, config.input_dim))
    p_hat, cache = net.forward(features)
    targets = _random_targets(rng, p_hat)
    weights = _random_weights(rng)
    shapes = [t.shape for t in net.parameters()]
    sizes = [int(np.prod(s)) for s in shapes]

    def unflatten(flat: Array) -> list[Array]:
        parts = np.split(flat, np.cumsum(sizes)[:-1])
        return [part.reshape(shape) for part, shape in zip(parts, shapes, strict=True)]

    def f(flat: Array) -> float:
        candidate = net.copy()
        candidate.set_parameters(unflatten(flat))
        p, _ = candidate.forward(features)
        return joint_loss_and_grad(p, targets, DEFAULT_GRID, weights)[0].total

    _, grad_p = joint_loss_and_grad(p_hat, targets, DEFAULT_GRID, weights)
    analytic = np.concatenate([g.ravel() for g in net.backward(cache, grad_p)])
    return f, analytic, np.concatenate([t.ravel() for t in net.parameters()])


def _problem(kind: str, rng: np.random.Generator, seed: int) -> Problem:
    if kind == "loss_ad":
        return _distance_problem(rng, DEFAULT_GRID.n_bins, euclidean_term)
    if kind == "loss_rd":
        return _distance_problem(rng, 5, euclidean_term)
    if kind == "kl":
        return _distance_problem(rng, DEFAULT_GRID.n_bins, kl_term)
    if kind == "loss_score":
        return _score_problem(rng)
    if kind == "joint":
        return _joint_problem(rng)
    if kind == "head":
        return _head_problem(rng)
    return _net_problem(rng, seed)


def run_gradcheck(
    cases: int = DEFAULT_CASES,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
    perturb_analytic: bool = False,
) -> GradcheckSummary:
    """Run ``cases`` seeded comparisons, cycling through CASE_KINDS.

    Args:
        cases: Number of comparisons.
        seed: Base seed; case i uses seed·10000 + i.
        tolerance: Largest accepted relative error.
        perturb_analytic: Corrupt the first entry of every analytic gradient,
            which must make the run fail.
    """
    summary = GradcheckSummary(tolerance=tolerance)
    for index in range(cases):
        kind = CASE_KINDS[index % len(CASE_KINDS)]
        case_seed = seed * 10_000 + index
        rng = np.random.default_rng(case_seed)
        f, analytic, x = _problem(kind, rng, case_seed)
        analytic = np.array(analytic, dtype=np.float64)
        if perturb_analytic:
            analytic.flat[0] += 0.01 * float(np.linalg.norm(analytic)) + 1e-3
        error = relative_error(analytic, numeric_gradient(f, x))
        case = GradCase(
            index=index, kind=kind, seed=case_seed, rel_error=error, passed=error < tolerance
        )
        summary.cases.append(case)
        if not case.passed:
            log.warning("gradcheck_failed", index=index, kind=kind, seed=case_seed, rel_error=error)
    log.info(
        "gradcheck_done",
        cases=cases,
        max_rel_error=summary.max_rel_error,
        failures=len(summary.failures),
    )
    return summary
