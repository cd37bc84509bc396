"""Trainable layers: linear maps, layer norm, attention, encoder blocks.

All parameters live in a ParameterStore under unique hierarchical names,
are initialized Xavier-uniform from an explicit rng, and are updated
in place by the optimizer.
"""

from __future__ import annotations

import math

import numpy as np

from .autodiff import Tensor

__all__ = [
    "ParameterStore",
    "Linear",
    "LayerNorm",
    "MultiHeadAttention",
    "EncoderBlock",
    "NoLegalActionError",
    "linear",
    "softmax",
    "log_softmax",
    "masked_softmax",
]


class NoLegalActionError(RuntimeError):
    """Raised when a softmax is requested with every entry masked."""


class ParameterStore:
    """Named trainable tensors plus their optimizer moment buffers."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self.moment1: dict[str, np.ndarray] = {}
        self.moment2: dict[str, np.ndarray] = {}
        self.step_count = 0

    def create(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        tensor = Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)
        self._params[name] = tensor
        self.moment1[name] = np.zeros_like(tensor.data)
        self.moment2[name] = np.zeros_like(tensor.data)
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def parameter_count(self) -> int:
        return sum(t.size for t in self._params.values())

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.grad = None

    def gradients(self) -> dict[str, np.ndarray]:
        """Copies of the accumulated gradients (zeros where none accumulated)."""
        return {
            name: (np.zeros_like(t.data) if t.grad is None else t.grad.copy())
            for name, t in self._params.items()
        }


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map over the last axis: x @ weight + bias."""
    out = x @ weight
    return out if bias is None else out + bias


class Linear:
    def __init__(self, store: ParameterStore, name: str, fan_in: int, fan_out: int,
                 rng: np.random.Generator):
        self.weight = store.create(f"{name}.weight", xavier_uniform(rng, fan_in, fan_out))
        self.bias = store.create(f"{name}.bias", np.zeros(fan_out))

    def __call__(self, x: Tensor) -> Tensor:
        return linear(x, self.weight, self.bias)


class LayerNorm:
    def __init__(self, store: ParameterStore, name: str, dim: int, eps: float = 1e-5):
        self.gain = store.create(f"{name}.gain", np.ones(dim))
        self.bias = store.create(f"{name}.bias", np.zeros(dim))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        centered = x - x.mean(axis=-1, keepdims=True)
        variance = (centered * centered).mean(axis=-1, keepdims=True)
        return centered / ((variance + self.eps) ** 0.5) * self.gain + self.bias


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    # the shift is a constant, which leaves the gradient unchanged
    shift = x.data.max(axis=axis, keepdims=True)
    e = (x - shift).exp()
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shift = x.data.max(axis=axis, keepdims=True)
    s = x - shift
    return s - s.exp().sum(axis=axis, keepdims=True).log()


def masked_softmax(x: Tensor, mask: np.ndarray, axis: int = -1) -> Tensor:
    """Softmax over the unmasked entries; masked entries get exactly zero.

    ``mask`` is boolean with True marking valid entries.  Raises
    NoLegalActionError if any row along ``axis`` is fully masked.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape:
        raise ValueError(f"mask shape {mask.shape} does not match logits {x.shape}")
    if not mask.any(axis=axis).all():
        raise NoLegalActionError("all actions masked: no legal action available")
    shift = x.data.max(axis=axis, keepdims=True)
    e = (x - shift).exp() * mask.astype(np.float64)
    return e / e.sum(axis=axis, keepdims=True)


class MultiHeadAttention:
    """Scaled dot-product attention with per-head projections, no positions."""

    def __init__(self, store: ParameterStore, name: str, dim: int, num_heads: int,
                 rng: np.random.Generator):
        if dim % num_heads != 0:
            raise ValueError(f"embedding dim {dim} not divisible by {num_heads} heads")
        self.dim = dim
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.query_proj = Linear(store, f"{name}.query", dim, dim, rng)
        self.key_proj = Linear(store, f"{name}.key", dim, dim, rng)
        self.value_proj = Linear(store, f"{name}.value", dim, dim, rng)
        self.out_proj = Linear(store, f"{name}.out", dim, dim, rng)

    def _split_heads(self, x: Tensor) -> Tensor:
        *batch, length, _ = x.shape
        x = x.reshape(*batch, length, self.num_heads, self.head_dim)
        return x.swapaxes(-3, -2)  # [*, heads, L, head_dim]

    def _merge_heads(self, x: Tensor) -> Tensor:
        x = x.swapaxes(-3, -2)  # [*, L, heads, head_dim]
        *batch, length, _, _ = x.shape
        return x.reshape(*batch, length, self.dim)

    def __call__(self, query_seq: Tensor, key_seq: Tensor, value_seq: Tensor) -> Tensor:
        q = self._split_heads(self.query_proj(query_seq))
        k = self._split_heads(self.key_proj(key_seq))
        v = self._split_heads(self.value_proj(value_seq))
        scores = (q @ k.swapaxes(-1, -2)) * (1.0 / math.sqrt(self.head_dim))
        out = softmax(scores, axis=-1) @ v
        return self.out_proj(self._merge_heads(out))


class EncoderBlock:
    """Post-norm transformer encoder: self-attention + feed-forward sublayers."""

    def __init__(self, store: ParameterStore, name: str, dim: int, num_heads: int,
                 ffn_dim: int, rng: np.random.Generator):
        self.attention = MultiHeadAttention(store, f"{name}.attention", dim, num_heads, rng)
        self.norm1 = LayerNorm(store, f"{name}.norm1", dim)
        self.ffn_in = Linear(store, f"{name}.ffn_in", dim, ffn_dim, rng)
        self.ffn_out = Linear(store, f"{name}.ffn_out", ffn_dim, dim, rng)
        self.norm2 = LayerNorm(store, f"{name}.norm2", dim)

    def __call__(self, x: Tensor) -> Tensor:
        x = self.norm1(x + self.attention(x, x, x))
        return self.norm2(x + self.ffn_out(self.ffn_in(x).relu()))
