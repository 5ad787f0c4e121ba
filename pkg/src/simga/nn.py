"""Minimal dense NN stack: linear layers, MLP forward/backward, loss, Adam, grad check.

Everything is float64 numpy; gradients are hand-derived per layer (no autodiff).
Training is bit-reproducible for a fixed seed in single-threaded mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError

__all__ = [
    "ensure_finite",
    "LinearLayer",
    "init_linear",
    "mlp_forward",
    "mlp_backward",
    "relu_pre_activations",
    "softmax_rows",
    "softmax_cross_entropy",
    "AdamState",
    "adam_init",
    "adam_step",
    "grad_check",
    "flatten_arrays",
    "unflatten_arrays",
]


def ensure_finite(arr: np.ndarray, context: str) -> np.ndarray:
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite values in {context}")
    return arr


@dataclass
class LinearLayer:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)

    def __post_init__(self) -> None:
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ParameterError("inconsistent linear layer shapes")


def init_linear(rng: np.random.Generator, fan_in: int, fan_out: int) -> LinearLayer:
    """Symmetric uniform init in +-sqrt(6 / (fan_in + fan_out)), zero bias."""
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    weight = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    return LinearLayer(weight=weight, bias=np.zeros(fan_out))


def mlp_forward(
    layers: list[LinearLayer],
    x: np.ndarray,
    dropout: float = 0.0,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Affine stack with ReLU between layers (none after the last).

    While training, inverted dropout is applied to each hidden activation, so
    evaluation needs no rescaling. Returns (output, cache for backward).
    """
    if training and dropout > 0.0 and len(layers) > 1 and rng is None:
        raise ParameterError("dropout during training needs an rng")
    inputs: list[np.ndarray] = []
    pre: list[np.ndarray] = []
    masks: list[np.ndarray | None] = []
    h = np.asarray(x, dtype=np.float64)
    last = len(layers) - 1
    for i, layer in enumerate(layers):
        if h.shape[1] != layer.weight.shape[0]:
            raise ParameterError(
                f"layer {i}: input width {h.shape[1]} != fan_in {layer.weight.shape[0]}"
            )
        inputs.append(h)
        z = h @ layer.weight + layer.bias
        pre.append(z)
        if i < last:
            h = np.maximum(z, 0.0)
            if training and dropout > 0.0:
                mask = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
                h = h * mask
                masks.append(mask)
            else:
                masks.append(None)
        else:
            h = z
    ensure_finite(h, "mlp output")
    return h, {"inputs": inputs, "pre": pre, "masks": masks}


def mlp_backward(
    layers: list[LinearLayer], cache: dict, grad_out: np.ndarray
) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Backprop through mlp_forward; returns (grad wrt input, [(dW, db)] per layer)."""
    grads: list[tuple[np.ndarray, np.ndarray] | None] = [None] * len(layers)
    g = grad_out
    last = len(layers) - 1
    for i in range(last, -1, -1):
        if i < last:
            mask = cache["masks"][i]
            if mask is not None:
                g = g * mask
            g = g * (cache["pre"][i] > 0.0)
        grads[i] = (cache["inputs"][i].T @ g, g.sum(axis=0))
        g = g @ layers[i].weight.T
    return g, grads  # type: ignore[return-value]


def relu_pre_activations(cache: dict) -> np.ndarray:
    """Concatenated hidden pre-activations; empty for a single-layer stack."""
    hidden = cache["pre"][:-1]
    if not hidden:
        return np.empty(0)
    return np.concatenate([z.ravel() for z in hidden])


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray, labels: np.ndarray, index_mask: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean NLL over the masked rows; gradient is zero outside the mask.

    Stabilized by row-wise max subtraction.
    """
    idx = np.asarray(index_mask, dtype=np.int64)
    if idx.size == 0:
        raise ParameterError("empty index mask")
    sub = logits[idx]
    y = np.asarray(labels)[idx]
    z = sub - sub.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(log_norm - z[np.arange(idx.size), y]))
    probs = softmax_rows(sub)
    probs[np.arange(idx.size), y] -= 1.0
    grad = np.zeros_like(logits)
    grad[idx] = probs / idx.size
    ensure_finite(grad, "cross-entropy gradient")
    return loss, grad


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params: list[np.ndarray]) -> AdamState:
    return AdamState(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    weight_decay: float = 0.0,
) -> AdamState:
    """One bias-corrected Adam update, in place; weight decay enters as +wd*theta on the gradient."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ParameterError("params/grads/state length mismatch")
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if weight_decay:
            g = g + weight_decay * p
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return state


def flatten_arrays(arrays: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([a.ravel() for a in arrays]) if arrays else np.empty(0)


def unflatten_arrays(flat: np.ndarray, like: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    pos = 0
    for a in like:
        out.append(flat[pos : pos + a.size].reshape(a.shape))
        pos += a.size
    if pos != flat.size:
        raise ParameterError("flat vector size mismatch")
    return out


def grad_check(
    value_and_grad,
    params: np.ndarray,
    samples: int = 200,
    step: float = 1e-5,
    rng: np.random.Generator | None = None,
    kink_tol: float = 1e-6,
) -> float:
    """Central-difference check of an analytic gradient on sampled coordinates.

    value_and_grad(flat_params) must return (loss, flat_grad, relu_pre) with
    relu_pre the concatenated hidden pre-activations (may be empty); the loss
    must be deterministic (dropout off). Coordinates whose perturbation flips a
    ReLU sign, or that sit within kink_tol of a kink, are skipped: the central
    difference straddles a nondifferentiable point there. Returns the max
    relative error, with the denominator floored at 1e-3 so near-zero
    coordinates are judged on an absolute scale.
    """
    rng = rng or np.random.default_rng(0)
    loss0, grad0, pre0 = value_and_grad(params)
    if not np.isfinite(loss0):
        raise NumericError("loss non-finite at the base point")
    count = min(samples, params.size)
    coords = rng.choice(params.size, size=count, replace=False)
    signs0 = pre0 > 0.0
    worst = 0.0
    for i in coords:
        bumped = params.copy()
        bumped[i] += step
        loss_p, _, pre_p = value_and_grad(bumped)
        bumped[i] -= 2.0 * step
        loss_m, _, pre_m = value_and_grad(bumped)
        if pre0.size:
            crossed = (
                np.any((pre_p > 0.0) != signs0)
                or np.any((pre_m > 0.0) != signs0)
                or min(np.abs(pre_p).min(), np.abs(pre_m).min()) < kink_tol
            )
            if crossed:
                continue
        numeric = (loss_p - loss_m) / (2.0 * step)
        analytic = grad0[i]
        denom = max(abs(numeric), abs(analytic), 1e-3)
        worst = max(worst, abs(numeric - analytic) / denom)
    return worst
