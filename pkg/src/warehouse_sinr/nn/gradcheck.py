"""
Central-difference gradient checking.
"""

import logging
from typing import Callable, Dict, Tuple

import numpy as np

logger = logging.getLogger(__name__)

Fragment = Callable[[Dict[str, np.ndarray]], Tuple[float, Dict[str, np.ndarray]]]


def relative_error(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)


def numeric_gradient(
    loss: Callable[[Dict[str, np.ndarray]], float], values: Dict[str, np.ndarray], h: float
) -> Dict[str, np.ndarray]:
    """Central differences (f(p + h) - f(p - h)) / 2h for every entry of every array."""
    grads = {}
    for name, array in values.items():
        grad = np.zeros_like(array)
        flat, gflat = array.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus = loss(values)
            flat[i] = original - h
            minus = loss(values)
            flat[i] = original
            gflat[i] = (plus - minus) / (2.0 * h)
        grads[name] = grad
    return grads


def grad_check(fragment: Fragment, values: Dict[str, np.ndarray], h: float = 1e-5) -> float:
    """
    Max relative error between analytic and numeric gradients.

    Args:
        fragment (Callable): Maps named arrays (parameters and inputs) to
            (scalar loss, gradients keyed like the arrays)
        values (Dict[str, np.ndarray]): Point to check at; copied to f64
        h (float): Finite-difference step

    Returns:
        float: max |a - b| / max(|a|, |b|, 1e-8) over every entry
    """
    point = {k: np.array(v, dtype=np.float64) for k, v in values.items()}
    _, analytic = fragment(point)
    numeric = numeric_gradient(lambda p: float(fragment(p)[0]), point, h)
    worst = 0.0
    for name in point:
        err = float(relative_error(analytic[name], numeric[name]).max(initial=0.0))
        logger.debug(f"grad_check {name}: max rel error {err:.3e}")
        worst = max(worst, err)
    return worst
