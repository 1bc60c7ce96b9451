"""A small dense regression head with exact gradients and AdamW updates.

The head maps d-dimensional embeddings to one or two recognizability
scores through affine layers with rectified hidden units and a linear
output.  Everything is plain float64 numpy so training is deterministic
for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatchError
from .validation import as_matrix


@dataclass(eq=False)
class RegressionHead:
    """Affine layer stack; weights[i] has shape (dims[i], dims[i+1])."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list: W0, b0, W1, b1, ..."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def copy(self) -> "RegressionHead":
        return RegressionHead(
            layer_dims=self.layer_dims,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_head(
    input_dim: int,
    hidden: Sequence[int] = (256, 64),
    outputs: int = 2,
    seed: int = 0,
) -> RegressionHead:
    """Seeded initialization: uniform weights scaled by 1/sqrt(fan_in), zero biases."""
    dims = (int(input_dim), *(int(h) for h in hidden), int(outputs))
    if any(d <= 0 for d in dims):
        raise ConfigError(f"all layer dimensions must be positive, got {dims}")
    if outputs not in (1, 2):
        raise ConfigError(f"head must emit 1 or 2 outputs, got {outputs}")
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return RegressionHead(layer_dims=dims, weights=weights, biases=biases)


def _check_batch(head: RegressionHead, batch) -> np.ndarray:
    x = as_matrix(batch, "batch")
    if x.shape[1] != head.input_dim:
        raise DimensionMismatchError(
            f"batch has dimension {x.shape[1]}, head expects {head.input_dim}"
        )
    return x


def _forward_cached(head: RegressionHead, x: np.ndarray):
    """Forward pass keeping every layer input and pre-activation."""
    inputs = [x]
    pre_activations = []
    h = x
    last = len(head.weights) - 1
    for i, (w, b) in enumerate(zip(head.weights, head.biases)):
        z = h @ w + b
        pre_activations.append(z)
        h = z if i == last else np.maximum(z, 0.0)
        if i != last:
            inputs.append(h)
    return h, inputs, pre_activations


def forward(head: RegressionHead, batch) -> np.ndarray:
    """Deterministic forward pass over an (n, d) batch."""
    x = _check_batch(head, batch)
    out, _, _ = _forward_cached(head, x)
    return out


def mse_loss(pred, target) -> float:
    """Mean over samples of the squared error summed across outputs."""
    p = as_matrix(pred, "pred")
    t = as_matrix(target, "target")
    if p.shape != t.shape:
        raise DimensionMismatchError(f"pred shape {p.shape} != target shape {t.shape}")
    if p.shape[0] == 0:
        raise ConfigError("loss of an empty batch is undefined")
    return float(np.sum((p - t) ** 2) / p.shape[0])


def backward(head: RegressionHead, batch, target) -> list[np.ndarray]:
    """Exact gradients of the loss, flat like ``head.parameters()``."""
    x = _check_batch(head, batch)
    t = as_matrix(target, "target")
    out, inputs, pre_activations = _forward_cached(head, x)
    if out.shape != t.shape:
        raise DimensionMismatchError(f"target shape {t.shape} != output shape {out.shape}")
    n = x.shape[0]
    delta = (2.0 / n) * (out - t)

    grads_w: list[np.ndarray] = [None] * len(head.weights)
    grads_b: list[np.ndarray] = [None] * len(head.weights)
    for i in range(len(head.weights) - 1, -1, -1):
        grads_w[i] = inputs[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ head.weights[i].T) * (pre_activations[i - 1] > 0)

    flat: list[np.ndarray] = []
    for gw, gb in zip(grads_w, grads_b):
        flat.append(gw)
        flat.append(gb)
    return flat


@dataclass(eq=False)
class AdamWState:
    """First/second moment accumulators and the shared step counter."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0


def init_adamw_state(head: RegressionHead) -> AdamWState:
    params = head.parameters()
    return AdamWState(
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
        step=0,
    )


def adamw_step(
    head: RegressionHead, state: AdamWState, gradients: Sequence[np.ndarray], config
) -> tuple[RegressionHead, AdamWState]:
    """One bias-corrected Adam update with decoupled weight decay.

    Decay multiplies every parameter by exactly (1 - lr * wd) before the
    gradient-driven part of the step; both act on the pre-step values.
    ``config`` supplies learning_rate, weight_decay, adam_beta1,
    adam_beta2 and adam_epsilon.
    """
    params = head.parameters()
    if len(gradients) != len(params):
        raise ConfigError(
            f"got {len(gradients)} gradient arrays for {len(params)} parameters"
        )
    lr = config.learning_rate
    beta1 = config.adam_beta1
    beta2 = config.adam_beta2
    eps = config.adam_epsilon
    decay_factor = 1.0 - lr * config.weight_decay

    state.step += 1
    t = state.step
    bias1 = 1.0 - beta1**t
    bias2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, gradients, state.m, state.v):
        if g.shape != p.shape:
            raise ConfigError("gradient shape does not match its parameter")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        update = lr * (m / bias1) / (np.sqrt(v / bias2) + eps)
        p *= decay_factor
        p -= update
    return head, state
