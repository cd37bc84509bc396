"""Adam with bias correction over a ParameterStore."""

from __future__ import annotations

import numpy as np

from .layers import ParameterStore

__all__ = ["NonFiniteGradientError", "adam_step"]


class NonFiniteGradientError(RuntimeError):
    """A gradient contained nan/inf; the optimizer step was rejected."""


def adam_step(
    store: ParameterStore,
    grads: dict[str, np.ndarray] | None = None,
    lr: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> ParameterStore:
    """One in-place Adam update.

    ``grads`` maps parameter names to gradient arrays; when omitted, the
    gradients accumulated on the store's tensors are used.  The step is
    rejected (no state mutated) if any gradient is non-finite.
    """
    if grads is None:
        grads = store.gradients()
    missing = [name for name in store.names() if name not in grads]
    if missing:
        raise ValueError(f"gradients missing for parameters: {missing}")
    for name, grad in grads.items():
        if name not in store:
            raise ValueError(f"gradient for unknown parameter {name!r}")
        if np.asarray(grad).shape != store[name].data.shape:
            raise ValueError(f"gradient shape mismatch for {name!r}")
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(f"non-finite gradient for parameter {name!r}")
    store.step_count += 1
    t = store.step_count
    scale1 = 1.0 - beta1**t
    scale2 = 1.0 - beta2**t
    for name, param in store.items():
        grad = np.asarray(grads[name], dtype=np.float64)
        m = store.moment1[name]
        v = store.moment2[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        param.data -= lr * (m / scale1) / (np.sqrt(v / scale2) + eps)
    return store
