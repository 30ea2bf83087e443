"""Adam and RMSProp acting in place on lists of numpy arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

__all__ = ["AdamState", "RmspropState", "adam_step", "rmsprop_step", "Adam", "RMSProp"]


def _check(params, grads):
    if len(params) != len(grads):
        raise UsageError(f"{len(params)} parameter arrays but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise UsageError(f"parameter shape {np.shape(p)} != gradient shape {np.shape(g)}")


@dataclass
class AdamState:
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0


@dataclass
class RmspropState:
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(state: AdamState, params, grads, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, t=None):
    """One bias-corrected Adam update, in place.

    ``t`` is the 1-based step number; by default ``state.t + 1``.
    """
    _check(params, grads)
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    _check(params, state.m)
    t = state.t + 1 if t is None else int(t)
    if t < 1:
        raise UsageError("Adam step counter starts at 1")
    state.t = t
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


def rmsprop_step(state: RmspropState, params, grads, lr=1e-2, alpha=0.99, eps=1e-8):
    """One RMSProp update, in place: ``p -= lr * g / (sqrt(v) + eps)``."""
    _check(params, grads)
    if not state.v:
        state.v = [np.zeros_like(p) for p in params]
    _check(params, state.v)
    for p, g, v in zip(params, grads, state.v):
        v *= alpha
        v += (1.0 - alpha) * g * g
        p -= lr * g / (np.sqrt(v) + eps)
    return params, state


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.state = AdamState()

    def step(self, params, grads):
        adam_step(self.state, params, grads, self.lr, self.beta1, self.beta2, self.eps)


class RMSProp:
    def __init__(self, lr=1e-2, alpha=0.99, eps=1e-8):
        self.lr, self.alpha, self.eps = lr, alpha, eps
        self.state = RmspropState()

    def step(self, params, grads):
        rmsprop_step(self.state, params, grads, self.lr, self.alpha, self.eps)
