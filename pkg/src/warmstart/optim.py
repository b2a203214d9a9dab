"""Plain SGD and Adam over ParamSets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParamSet


def sgd_step(params: ParamSet, grads: ParamSet, lr: float) -> ParamSet:
    # grads are already batch means
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    return params - grads * lr


@dataclass
class OptimizerState:
    kind: str = "adam"
    m: ParamSet | None = None
    v: ParamSet | None = None
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, kind: str, params: ParamSet, **kw) -> "OptimizerState":
        if kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {kind!r}")
        if kind == "sgd":
            return cls(kind="sgd")
        return cls(kind="adam", m=params.zeros_like(), v=params.zeros_like(), **kw)


def adam_step(
    state: OptimizerState, params: ParamSet, grads: ParamSet, lr: float
) -> tuple[ParamSet, OptimizerState]:
    """Bias-corrected Adam, no weight decay.  ``state`` is not mutated."""
    if state.m is None or state.v is None:
        raise ValueError("Adam state has no moment buffers")
    state.m.check_compatible(params)
    params.check_compatible(grads)
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    m = ParamSet({k: b1 * state.m[k] + (1 - b1) * grads[k] for k in grads})
    v = ParamSet({k: b2 * state.v[k] + (1 - b2) * grads[k] ** 2 for k in grads})
    c1, c2 = 1 - b1 ** t, 1 - b2 ** t
    new = ParamSet({
        k: params[k] - lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + state.eps) for k in params
    })
    return new, OptimizerState("adam", m, v, t, b1, b2, state.eps)


def optimizer_step(
    state: OptimizerState, params: ParamSet, grads: ParamSet, lr: float
) -> tuple[ParamSet, OptimizerState]:
    if state.kind == "sgd":
        return sgd_step(params, grads, lr), OptimizerState("sgd", step=state.step + 1)
    return adam_step(state, params, grads, lr)
