"""Minimal trainable tensor toolkit backing the allocation policy."""

from .autodiff import Tensor, no_grad, is_grad_enabled
from .layers import (
    ParameterStore,
    Linear,
    LayerNorm,
    MultiHeadAttention,
    EncoderBlock,
    NoLegalActionError,
    linear,
    softmax,
    log_softmax,
    masked_softmax,
)
from .optim import NonFiniteGradientError, adam_step
from .checkpoint import CheckpointError, save_checkpoint, load_checkpoint, FORMAT_VERSION
from .gradcheck import max_relative_gradient_error

__all__ = [
    "Tensor",
    "no_grad",
    "is_grad_enabled",
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
    "NonFiniteGradientError",
    "adam_step",
    "CheckpointError",
    "save_checkpoint",
    "load_checkpoint",
    "FORMAT_VERSION",
    "max_relative_gradient_error",
]
