"""Compact feedforward predictor with a sigmoid + L1-normalized distribution head.

Affine layers with rectifiers in between map a feature vector to n_bins
logits; the head turns them into a predicted attractiveness distribution p̂,
from which r̂ and ŷ are derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray

from dual_ldl.core.distributions import (
    DistributionGrid,
    derive_rating_distribution,
    regress_score,
    sigmoid_normalize,
    sigmoid_normalize_backward,
)
from dual_ldl.errors import ConfigError, NumericError, ShapeError, StateError
from dual_ldl.models.training import NetConfig

log = structlog.get_logger(__name__)

Layer = tuple[NDArray[np.float64], NDArray[np.float64]]


@dataclass(frozen=True)
class ForwardCache:
    """What backward needs from one forward call.

    Attributes:
        activations: Input of every affine layer; activations[0] is the feature batch.
        pre_activations: Hidden-layer outputs before the rectifier.
        logits: Output-layer values before the head.
    """

    activations: list[NDArray[np.float64]]
    pre_activations: list[NDArray[np.float64]]
    logits: NDArray[np.float64]

    @property
    def batch_size(self) -> int:
        return int(self.logits.shape[0])


@dataclass(frozen=True)
class Prediction:
    """Per-sample p̂ (n, K), r̂ (n, 5) and ŷ (n,)."""

    p_hat: NDArray[np.float64]
    r_hat: NDArray[np.float64]
    y_hat: NDArray[np.float64]


def _relu(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.maximum(x, 0.0)


class PredictorNet:
    """Feedforward network over feature vectors.

    Parameters are stored as a list of (weight, bias) pairs; weights have
    shape (fan_in, fan_out) so a batch is propagated as ``x @ W + b``.
    """

    def __init__(self, config: NetConfig, layers: list[Layer]) -> None:
        expected = config.layer_dims()
        if len(layers) != len(expected):
            raise ConfigError(f"expected {len(expected)} layers, got {len(layers)}")
        for (fan_in, fan_out), (weight, bias) in zip(expected, layers, strict=True):
            if weight.shape != (fan_in, fan_out) or bias.shape != (fan_out,):
                raise ConfigError(
                    f"layer shapes {weight.shape}/{bias.shape} "
                    f"do not chain as ({fan_in}, {fan_out})"
                )
            if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias))):
                raise NumericError("parameters")
        self.config = config
        self.layers = [(w.astype(np.float64), b.astype(np.float64)) for w, b in layers]

    @classmethod
    def init(cls, config: NetConfig) -> PredictorNet:
        """Seeded fan-in-aware uniform weights and zero biases.

        Layers feeding a rectifier draw from U(±√(6/fan_in)); the output layer
        from U(±√(1/fan_in)).
        """
        rng = np.random.default_rng(config.seed)
        dims = config.layer_dims()
        layers: list[Layer] = []
        for idx, (fan_in, fan_out) in enumerate(dims):
            gain = 1.0 if idx == len(dims) - 1 else 6.0
            limit = math.sqrt(gain / fan_in)
            weight = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            layers.append((weight, np.zeros(fan_out, dtype=np.float64)))
        net = cls(config, layers)
        log.debug("net_initialized", dims=dims, params=net.param_count(), seed=config.seed)
        return net

    # ── Parameters ──────────────────────────────────────────────────────────

    def parameters(self) -> list[NDArray[np.float64]]:
        """Every tensor in declared order: W0, b0, W1, b1, ..."""
        return [t for layer in self.layers for t in layer]

    def set_parameters(self, params: list[NDArray[np.float64]]) -> None:
        if len(params) != 2 * len(self.layers):
            raise StateError(f"expected {2 * len(self.layers)} tensors, got {len(params)}")
        layers: list[Layer] = []
        pairs = zip(self.layers, params[::2], params[1::2], strict=True)
        for (weight, bias), new_w, new_b in pairs:
            if new_w.shape != weight.shape or new_b.shape != bias.shape:
                raise StateError("parameter shapes changed")
            layers.append((new_w, new_b))
        self.layers = layers

    def param_count(self) -> int:
        return sum(t.size for t in self.parameters())

    def copy(self) -> PredictorNet:
        return PredictorNet(self.config, [(w.copy(), b.copy()) for w, b in self.layers])

    # ── Passes ──────────────────────────────────────────────────────────────

    def logits(self, features: ArrayLike) -> tuple[NDArray[np.float64], ForwardCache]:
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if x.ndim != 2 or x.shape[1] != self.config.input_dim:
            raise ShapeError(
                f"features of width {x.shape[-1]} != input_dim {self.config.input_dim}"
            )
        if not np.all(np.isfinite(x)):
            raise NumericError("features")
        activations = [x]
        pre_activations = []
        out = x
        last = len(self.layers) - 1
        for idx, (weight, bias) in enumerate(self.layers):
            z = out @ weight + bias
            if idx == last:
                out = z
            else:
                pre_activations.append(z)
                out = _relu(z)
                activations.append(out)
        return out, ForwardCache(activations, pre_activations, out)

    def forward(self, features: ArrayLike) -> tuple[NDArray[np.float64], ForwardCache]:
        """(n, input_dim) features -> ((n, K) p̂ rows summing to 1, cache)."""
        z, cache = self.logits(features)
        p_hat = sigmoid_normalize(z)
        if not np.all(np.isfinite(p_hat)):
            raise NumericError("head")
        return p_hat, cache

    def backward(
        self, cache: ForwardCache, output_grads: ArrayLike
    ) -> list[NDArray[np.float64]]:
        """Parameter gradients given ∂L/∂p̂ for the batch held in ``cache``.

        Returns:
            Gradients in the order of ``parameters()``.
        """
        g = np.atleast_2d(np.asarray(output_grads, dtype=np.float64))
        if g.shape != cache.logits.shape:
            raise StateError(
                f"output gradients {g.shape} do not match cached batch {cache.logits.shape}"
            )
        if len(cache.activations) != len(self.layers):
            raise StateError("cache was produced by a network of different depth")

        dz = sigmoid_normalize_backward(cache.logits, g)
        grads: list[NDArray[np.float64]] = []
        for idx in range(len(self.layers) - 1, -1, -1):
            weight, _ = self.layers[idx]
            a_prev = cache.activations[idx]
            grads.append(dz.sum(axis=0))
            grads.append(a_prev.T @ dz)
            if idx > 0:
                dz = (dz @ weight.T) * (cache.pre_activations[idx - 1] > 0.0)
        grads.reverse()
        return grads

    def predict(self, features: ArrayLike, grid: DistributionGrid) -> Prediction:
        """p̂, then r̂ by rating-bin sums and ŷ by midpoint expectation."""
        p_hat, _ = self.forward(features)
        return Prediction(
            p_hat=p_hat,
            r_hat=derive_rating_distribution(p_hat, grid),
            y_hat=np.asarray(regress_score(p_hat, grid), dtype=np.float64).reshape(-1),
        )


def init_net(config: NetConfig) -> PredictorNet:
    return PredictorNet.init(config)
