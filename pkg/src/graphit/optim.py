"""Adam optimizer and the two learning-rate schedules used for training.

Weight decay is classic L2 folded into the gradient (grad += wd * param)
before the moment updates, not the decoupled variant; the hyperparameter
grids sweep its magnitude, so the convention matters for interpreting runs.
"""
from __future__ import annotations

import numpy as np

from .autodiff import Tensor


class GradientError(RuntimeError):
    """A parameter received a non-finite gradient."""


class Adam:
    """Standard Adam over a name -> Tensor parameter dict."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = {k: np.zeros_like(t.value) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.value) for k, t in params.items()}

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def step(self, lr: float | None = None) -> None:
        """One update; `lr` overrides the stored rate (schedules pass it)."""
        lr = self.lr if lr is None else lr
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                g = np.zeros_like(p.value)
            if not np.all(np.isfinite(g)):
                raise GradientError(f"non-finite gradient for parameter {name!r}")
            if self.weight_decay:
                g = g + self.weight_decay * p.value
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def state(self) -> dict:
        return {
            "step": self.step_count,
            "m": {k: a.copy() for k, a in self.m.items()},
            "v": {k: a.copy() for k, a in self.v.items()},
        }

    def load_state(self, state: dict) -> None:
        self.step_count = int(state["step"])
        for k in self.params:
            self.m[k] = state["m"][k].copy()
            self.v[k] = state["v"][k].copy()


def halving_lr(base_lr: float, epoch: int) -> float:
    """Halve the rate every 50 epochs: base * 2^{-floor(epoch / 50)}."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    return base_lr * 2.0 ** (-(epoch // 50))


def warmup_lr(base_lr: float, step: int, warmup: int = 2000) -> float:
    """Inverse-sqrt schedule with a linear ramp, peaking at base_lr.

    lr(step) = scale * min(step^{-1/2}, step * warmup^{-3/2}) with scale
    chosen so both branches meet at base_lr when step == warmup. step counts
    optimizer updates, starting at 1; step 0 maps to 0.
    """
    if step < 0:
        raise ValueError("step must be non-negative")
    if step == 0:
        return 0.0
    scale = base_lr * np.sqrt(warmup)
    return float(scale * min(step ** -0.5, step * warmup ** -1.5))
