"""Named parameters and an Adam optimizer with bias correction."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor

__all__ = ["Parameter", "Adam"]


@dataclass
class Parameter:
    """A named, optionally trainable tensor."""

    name: str
    tensor: Tensor
    trainable: bool = True


class Adam:
    """Adam update rule; holds first/second moment accumulators per name.

    update: m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
            theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)

    Gradients of trainable parameters are cleared after each step. The step
    counter increments once per ``step()`` call.
    """

    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {learning_rate}")
        if not (0.0 <= beta1 < 1.0) or not (0.0 <= beta2 < 1.0):
            raise ValueError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
        if epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {epsilon}")
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: list[Parameter]) -> None:
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter names passed to Adam.step")
        for p in params:
            if not p.trainable:
                continue
            if p.tensor.grad is None:
                raise ValueError(f"parameter {p.name!r} has no gradient")
            if p.tensor.grad.shape != p.tensor.values.shape:
                raise ValueError(
                    f"parameter {p.name!r}: gradient shape "
                    f"{p.tensor.grad.shape} != value shape {p.tensor.values.shape}"
                )
            if p.name in self._m and self._m[p.name].shape != p.tensor.values.shape:
                raise ValueError(
                    f"parameter {p.name!r}: accumulator shape "
                    f"{self._m[p.name].shape} != value shape {p.tensor.values.shape}"
                )
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p in params:
            if not p.trainable:
                continue
            g = p.tensor.grad
            m = self._m.get(p.name)
            v = self._v.get(p.name)
            if m is None:
                m = np.zeros_like(p.tensor.values)
                v = np.zeros_like(p.tensor.values)
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * (g * g)
            self._m[p.name] = m
            self._v[p.name] = v
            p.tensor.values -= self.learning_rate * (m / bc1) / (
                np.sqrt(v / bc2) + self.epsilon
            )
            p.tensor.grad = None
