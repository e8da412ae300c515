"""
Adam optimizer over a flat dict of named parameters.
"""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from warehouse_sinr.exceptions import ShapeMismatch

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    """
    Adam moments and hyperparameters.

    Attributes:
        step (int): Updates applied so far
        m (Dict[str, np.ndarray]): First moments, shaped like the parameters
        v (Dict[str, np.ndarray]): Second moments
        lr (float): Learning rate
        beta1, beta2 (float): Moment decay rates
        eps (float): Denominator floor
    """

    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Params, **hyper) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            **hyper,
        )


def adam_step(params: Params, grads: Params, state: AdamState) -> Tuple[Params, AdamState]:
    """
    One bias-corrected Adam update, in place.

    Args:
        params (Dict[str, np.ndarray]): Parameters, updated in place
        grads (Dict[str, np.ndarray]): Gradients with the same keys and shapes
        state (AdamState): Moments, updated in place; step increments by 1

    Returns:
        Tuple[Dict[str, np.ndarray], AdamState]: The same params and state objects

    Raises:
        ShapeMismatch: Keys or shapes of params, grads and moments disagree
    """
    if set(grads) != set(params):
        raise ShapeMismatch(f"Gradient keys {sorted(set(grads) ^ set(params))} do not match params")
    for k, p in params.items():
        if grads[k].shape != p.shape:
            raise ShapeMismatch(f"Gradient for '{k}' is {grads[k].shape}, param is {p.shape}")
        if k not in state.m:
            state.m[k] = np.zeros_like(p)
            state.v[k] = np.zeros_like(p)
        elif state.m[k].shape != p.shape:
            raise ShapeMismatch(f"Adam moment for '{k}' is {state.m[k].shape}, param is {p.shape}")

    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    step_size = state.lr / bc1

    for k, p in params.items():
        g = grads[k].astype(p.dtype, copy=False)
        m, v = state.m[k], state.v[k]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        denom = np.sqrt(v / bc2) + state.eps
        p -= (step_size * m / denom).astype(p.dtype, copy=False)
    return params, state
