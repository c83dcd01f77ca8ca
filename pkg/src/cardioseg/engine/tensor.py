"""Dense tensors with a gradient slot, plus the Adam optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GradientError(ValueError):
    """Raised when a gradient is non-finite or shaped wrong."""


class Tensor:
    """A dense n-d array with an optional same-shaped gradient buffer."""

    __slots__ = ("data", "grad")

    def __init__(self, data: np.ndarray, grad: np.ndarray | None = None):
        self.data = np.asarray(data)
        if grad is not None and grad.shape != self.data.shape:
            raise GradientError(
                f"grad shape {grad.shape} != data shape {self.data.shape}"
            )
        self.grad = grad

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def add_grad(self, g: np.ndarray) -> None:
        if g.shape != self.data.shape:
            raise GradientError(
                f"grad shape {g.shape} != data shape {self.data.shape}"
            )
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad += g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"


@dataclass
class AdamState:
    """Bias-corrected Adam accumulator state for a named parameter set."""

    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: dict[str, Tensor]) -> AdamState:
    """Apply one Adam update in place using each parameter's .grad.

    Raises GradientError naming the parameter if its gradient is missing or
    non-finite. Moments are created lazily on the first step.
    """
    for name, p in params.items():
        if p.grad is None:
            raise GradientError(f"parameter {name!r} has no gradient")
        if not np.all(np.isfinite(p.grad)):
            raise GradientError(f"non-finite gradient for parameter {name!r}")

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    for name, p in params.items():
        g = p.grad
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / bias1
        v_hat = v / bias2
        p.data -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state
