"""Adam optimizer with bias correction and per-epoch learning-rate decay."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, NumericError
from .tensor import Tensor


class AdamState:
    """Moment buffers for one parameter tensor."""

    __slots__ = ("m", "v")

    def __init__(self, shape: tuple[int, ...]):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)


class Adam:
    """Standard Adam over a named parameter dict.

    Parameters with ``grad is None`` are treated as having zero gradient and
    are left untouched, which keeps their moment buffers at zero as well.
    """

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ContractError(f"learning rate must be positive, got {lr}")
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.state = {name: AdamState(p.data.shape) for name, p in params.items()}

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for parameter '{name}'")
            st = self.state[name]
            st.m *= self.beta1
            st.m += (1.0 - self.beta1) * g
            st.v *= self.beta2
            st.v += (1.0 - self.beta2) * (g * g)
            m_hat = st.m / bc1
            v_hat = st.v / bc2
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def scale_lr(self, factor: float) -> None:
        """Multiply the learning rate once (called at epoch boundaries)."""
        self.lr *= factor


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    """Uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out))."""
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out))
