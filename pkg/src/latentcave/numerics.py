"""Dense float64 tensor helpers and linear/activation layers with analytic gradients.

Everything downstream (the VAE, the trainer) runs on plain numpy arrays in
C (row-major) order. Layers own explicit gradient buffers that accumulate
across backward calls; the trainer decides when to zero and apply them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Tensor = np.ndarray


class DimensionError(ValueError):
    """Shapes passed to an operation do not line up."""


def tensor(values, shape=None) -> Tensor:
    """Build a float64 row-major tensor, checking finiteness and extent."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if shape is not None:
        expected = int(np.prod(shape))
        if arr.size != expected:
            raise DimensionError(
                f"data length {arr.size} does not match shape {tuple(shape)}"
            )
        arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor values must be finite")
    return arr


def glorot_uniform(out_dim: int, in_dim: int, rng: np.random.Generator) -> Tensor:
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-limit, limit, size=(out_dim, in_dim))


@dataclass
class LinearLayer:
    """Fully connected layer with accumulating gradient buffers.

    weights has shape (out, in); forward computes x @ weights.T + bias.
    Frozen layers accumulate gradients like any other but never change
    under apply_update.
    """

    weights: Tensor
    bias: Tensor
    grad_weights: Tensor = field(init=False)
    grad_bias: Tensor = field(init=False)
    frozen: bool = False

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise DimensionError(
                f"weights must be 2-d and bias 1-d, got {self.weights.shape} and {self.bias.shape}"
            )
        if self.weights.shape[0] != self.bias.shape[0]:
            raise DimensionError(
                f"bias length {self.bias.shape[0]} does not match weights out-dim {self.weights.shape[0]}"
            )
        self.grad_weights = np.zeros_like(self.weights)
        self.grad_bias = np.zeros_like(self.bias)

    @classmethod
    def create(cls, out_dim: int, in_dim: int, rng: np.random.Generator) -> "LinearLayer":
        """Glorot-uniform weights, zero bias."""
        return cls(weights=glorot_uniform(out_dim, in_dim, rng), bias=np.zeros(out_dim))

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    def zero_grads(self) -> None:
        self.grad_weights[:] = 0.0
        self.grad_bias[:] = 0.0

    def apply_update(self, delta_weights: Tensor, delta_bias: Tensor) -> None:
        """Add deltas to the parameters (no-op when frozen) and zero the grads."""
        if not self.frozen:
            self.weights += delta_weights
            self.bias += delta_bias
        self.zero_grads()


def linear_forward(layer: LinearLayer, x: Tensor) -> Tensor:
    """out[b, o] = sum_i weights[o, i] * x[b, i] + bias[o]."""
    if x.ndim != 2 or x.shape[1] != layer.in_dim:
        raise DimensionError(
            f"input shape {x.shape} incompatible with weights {layer.weights.shape}"
        )
    return x @ layer.weights.T + layer.bias


def linear_backward(layer: LinearLayer, x: Tensor, grad_out: Tensor) -> Tensor:
    """Accumulate parameter grads for a prior linear_forward(layer, x); return grad_in."""
    if x.ndim != 2 or x.shape[1] != layer.in_dim:
        raise DimensionError(
            f"input shape {x.shape} incompatible with weights {layer.weights.shape}"
        )
    if grad_out.shape != (x.shape[0], layer.out_dim):
        raise DimensionError(
            f"grad_out shape {grad_out.shape} incompatible with batch {x.shape[0]} "
            f"and weights {layer.weights.shape}"
        )
    layer.grad_weights += grad_out.T @ x
    layer.grad_bias += grad_out.sum(axis=0)
    return grad_out @ layer.weights


def relu(x: Tensor) -> Tensor:
    return np.maximum(x, 0.0)


def relu_backward(x: Tensor, grad_out: Tensor) -> Tensor:
    # subgradient at exactly 0 is 0
    return grad_out * (x > 0.0)


def sigmoid(x: Tensor) -> Tensor:
    """1 / (1 + e^-x), computed branch-wise so neither branch overflows."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(x: Tensor, grad_out: Tensor) -> Tensor:
    s = sigmoid(x)
    return grad_out * s * (1.0 - s)


def activation_forward(kind: str, x: Tensor) -> Tensor:
    if kind == "relu":
        return relu(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown activation kind: {kind!r}")


def activation_backward(kind: str, x: Tensor, grad_out: Tensor) -> Tensor:
    if kind == "relu":
        return relu_backward(x, grad_out)
    if kind == "sigmoid":
        return sigmoid_backward(x, grad_out)
    raise ValueError(f"unknown activation kind: {kind!r}")
