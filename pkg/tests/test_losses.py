import numpy as np
import pytest

from warehouse_sinr.exceptions import ShapeMismatch
from warehouse_sinr.nn.gradcheck import grad_check
from warehouse_sinr.training.losses import kl_divergence, kl_grad, mae_grad, mae_loss


def test_mae():
    assert mae_loss(np.array([0.0, 0.0]), np.array([1.0, 3.0])) == pytest.approx(2.0)
    assert mae_loss(np.ones((2, 4, 4)), np.ones((2, 4, 4))) == 0.0
    with pytest.raises(ShapeMismatch):
        mae_loss(np.zeros(2), np.zeros(3))


def test_mae_grad():
    g = mae_grad(np.array([0.0, 0.0, 1.0, 1.0]), np.array([1.0, -1.0, 0.5, 2.0]))
    np.testing.assert_allclose(g, [0.25, -0.25, -0.25, 0.25])
    assert mae_grad(np.zeros(3, np.float32), np.ones(3, np.float32)).dtype == np.float32


def test_kl_known_values():
    assert kl_divergence(np.zeros(4), np.zeros(4)) == 0.0
    assert kl_divergence(np.array([1.0, 0.0]), np.zeros(2)) == pytest.approx(0.5)
    batch_mu = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert kl_divergence(batch_mu, np.zeros((2, 2))) == pytest.approx(0.25)


@pytest.mark.parametrize("seed", range(10))
def test_kl_matches_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    mu = rng.normal(size=3)
    logvar = rng.uniform(-1.0, 1.0, size=3)
    std = np.exp(0.5 * logvar)
    z = mu + std * rng.standard_normal((1_000_000, 3))
    log_q = -0.5 * (((z - mu) / std) ** 2 + logvar).sum(axis=1)
    log_p = -0.5 * (z**2).sum(axis=1)
    estimate = float((log_q - log_p).mean())
    assert kl_divergence(mu, logvar) == pytest.approx(estimate, rel=0.02, abs=5e-3)


def test_kl_gradients(rng):
    values = {"mu": rng.normal(size=(3, 4)), "logvar": rng.uniform(-1.0, 1.0, size=(3, 4))}

    def fragment(v):
        dmu, dlogvar = kl_grad(v["mu"], v["logvar"])
        return kl_divergence(v["mu"], v["logvar"]), {"mu": dmu, "logvar": dlogvar}

    assert grad_check(fragment, values) < 1e-5


def test_kl_is_non_negative(rng):
    for _ in range(20):
        mu = rng.normal(size=(2, 5))
        logvar = rng.normal(size=(2, 5))
        assert kl_divergence(mu, logvar) >= 0.0
