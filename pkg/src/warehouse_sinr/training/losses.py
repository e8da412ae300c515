"""
Reconstruction and latent losses with their gradients.

Losses are accumulated in f64 whatever the input dtype.
"""

from typing import Tuple

import numpy as np

from warehouse_sinr.exceptions import ShapeMismatch


def _pair(a: np.ndarray, b: np.ndarray, what: str) -> Tuple[np.ndarray, np.ndarray]:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what}: shapes {a.shape} and {b.shape} differ")
    return a, b


def mae_loss(x: np.ndarray, xhat: np.ndarray) -> float:
    """Mean absolute error over every pixel (and sample)."""
    x, xhat = _pair(x, xhat, "mae_loss")
    return float(np.mean(np.abs(x.astype(np.float64) - xhat.astype(np.float64))))


def mae_grad(x: np.ndarray, xhat: np.ndarray) -> np.ndarray:
    """d mae / d xhat = sign(xhat - x) / n, in xhat's dtype."""
    x, xhat = _pair(x, xhat, "mae_grad")
    return (np.sign(xhat - x) / xhat.size).astype(xhat.dtype)


def kl_divergence(mu: np.ndarray, logvar: np.ndarray) -> float:
    """
    KL(N(mu, exp(logvar)) || N(0, I)) = -1/2 * sum(1 + logvar - mu^2 - exp(logvar)).

    A 1D input is one posterior; for (N, L) batches this is the mean over samples
    of the per-sample sums.
    """
    mu, logvar = _pair(mu, logvar, "kl_divergence")
    mu, logvar = mu.astype(np.float64), logvar.astype(np.float64)
    per_dim = -0.5 * (1.0 + logvar - mu**2 - np.exp(logvar))
    if per_dim.ndim <= 1:
        return float(per_dim.sum())
    return float(per_dim.reshape(len(per_dim), -1).sum(axis=1).mean())


def kl_grad(mu: np.ndarray, logvar: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients of kl_divergence with respect to mu and logvar."""
    mu, logvar = _pair(mu, logvar, "kl_grad")
    n = 1 if mu.ndim <= 1 else len(mu)
    dmu = mu / n
    dlogvar = 0.5 * (np.exp(logvar) - 1.0) / n
    return dmu.astype(mu.dtype), dlogvar.astype(logvar.dtype)
