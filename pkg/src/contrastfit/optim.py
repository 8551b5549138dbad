"""Adam optimizer and the shared linear warmup / linear decay schedule."""

from __future__ import annotations

import math

import numpy as np


def lr_multiplier(step: int, total_steps: int, warmup_ratio: float) -> float:
    """Learning-rate multiplier at a 1-based optimizer step.

    Ramps linearly from 0 to 1 over ceil(warmup_ratio * total_steps)
    steps, then decays linearly to 0 at the final step.
    """
    if not 1 <= step <= total_steps:
        raise ValueError(f"step must be in [1, {total_steps}], got {step}")
    if not 0.0 <= warmup_ratio <= 1.0:
        raise ValueError("warmup_ratio must be in [0, 1]")
    warmup_steps = math.ceil(warmup_ratio * total_steps)
    if step < warmup_steps:
        return step / warmup_steps
    if total_steps == warmup_steps:
        return 1.0
    return (total_steps - step) / (total_steps - warmup_steps)


class Adam:
    """Adam over a dict of named parameter arrays, updated in place.

    Moments are kept per parameter name; the update order is the sorted
    name order so results do not depend on dict construction order.
    """

    def __init__(self, params: dict[str, np.ndarray], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p) for name, p in params.items()}
        self.v = {name: np.zeros_like(p) for name, p in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for name in sorted(params):
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g**2
            params[name] -= lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
