"""
Three-branch heatmap networks.

The encoder runs one conv stack per channel group (distance with the aux
channels, permittivity, AP location), concatenates the feature maps, and
compresses them through a trunk conv and a dense layer. The VAE puts a
Gaussian posterior on top; the AE baseline a single dense bottleneck. Both
share one decoder: dense -> reshape -> transposed convs -> sigmoid.
"""

import logging
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, List, Optional, Tuple

import numpy as np

from warehouse_sinr.exceptions import (
    ConfigError,
    InvalidResolution,
    ShapeMismatch,
    UnknownParameter,
)
from warehouse_sinr.nn.layers import (
    conv2d,
    conv2d_backward,
    conv2d_transpose,
    conv2d_transpose_backward,
    dense,
    dense_backward,
    kaiming_uniform,
    leaky_relu,
    leaky_relu_backward,
    sigmoid,
    sigmoid_backward,
)

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]

BRANCHES = ("distance", "permittivity", "ap")
_ENC_K, _DEC_K = 3, 4


@dataclass(frozen=True)
class ModelConfig:
    """
    Architecture hyperparameters.

    Attributes:
        resolution (int): Input/output cells per side, divisible by 2**len(branch_channels)
        latent_dim (int): Latent width (default 64)
        n_aux (int): Aux channels routed into the distance branch
        branch_channels (Tuple[int, ...]): Conv widths per branch block (stride 2 each)
        trunk_channels (int): Width of the trunk conv after concatenation
        hidden_dim (int): Dense width feeding the heads
        logvar_clamp (float): logvar is clamped to [-logvar_clamp, logvar_clamp]
    """

    resolution: int = 64
    latent_dim: int = 64
    n_aux: int = 2
    branch_channels: Tuple[int, ...] = (16, 32, 64)
    trunk_channels: int = 64
    hidden_dim: int = 256
    logvar_clamp: float = 10.0

    def __post_init__(self):
        factor = 2 ** len(self.branch_channels)
        if self.resolution % factor or self.resolution < factor:
            raise InvalidResolution(
                f"Model resolution {self.resolution} must be a positive multiple of {factor}"
            )
        if self.latent_dim < 1 or self.hidden_dim < 1 or self.trunk_channels < 1:
            raise ConfigError("latent_dim, hidden_dim and trunk_channels must be >= 1")
        if self.n_aux < 0:
            raise ConfigError(f"n_aux must be >= 0, got {self.n_aux}")
        if not self.branch_channels:
            raise ConfigError("branch_channels must not be empty")

    @property
    def in_channels(self) -> int:
        return self.n_aux + 3

    @property
    def bottom(self) -> int:
        """Spatial size at the bottom of the encoder."""
        return self.resolution // 2 ** len(self.branch_channels)

    def groups(self) -> List[Tuple[str, slice]]:
        """Input channel slice of each encoder branch."""
        d = 1 + self.n_aux
        return [
            ("distance", slice(0, d)),
            ("permittivity", slice(d, d + 1)),
            ("ap", slice(d + 1, d + 2)),
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "resolution": self.resolution,
            "latent_dim": self.latent_dim,
            "n_aux": self.n_aux,
            "branch_channels": list(self.branch_channels),
            "trunk_channels": self.trunk_channels,
            "hidden_dim": self.hidden_dim,
            "logvar_clamp": self.logvar_clamp,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        kwargs = dict(data)
        if "branch_channels" in kwargs:
            kwargs["branch_channels"] = tuple(int(c) for c in kwargs["branch_channels"])
        return cls(**kwargs)


def reparameterize(mu: np.ndarray, logvar: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """z = mu + exp(logvar / 2) * noise."""
    if not (mu.shape == logvar.shape == noise.shape):
        raise ShapeMismatch(f"mu {mu.shape}, logvar {logvar.shape}, noise {noise.shape} differ")
    return mu + np.exp(0.5 * logvar) * noise


class HeatmapNet:
    """Shared encoder trunk and decoder. Subclasses add the latent head."""

    kind: ClassVar[str] = ""

    def __init__(
        self, cfg: Optional[ModelConfig] = None, seed: int = 0, params: Optional[Params] = None
    ):
        self._cfg = cfg or ModelConfig()
        self.params: Params = self._init_params(np.random.default_rng(seed))
        if params is not None:
            self.load_params(params)

    @property
    def cfg(self) -> ModelConfig:
        return self._cfg

    @property
    def param_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def _head_shapes(self) -> Dict[str, Tuple[int, ...]]:
        raise NotImplementedError

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        cfg = self._cfg
        shapes: Dict[str, Tuple[int, ...]] = {}
        for name, group in cfg.groups():
            c_in = group.stop - group.start
            for i, c_out in enumerate(cfg.branch_channels):
                shapes[f"{name}.conv{i}.w"] = (c_out, c_in, _ENC_K, _ENC_K)
                shapes[f"{name}.conv{i}.b"] = (c_out,)
                c_in = c_out
        concat = len(BRANCHES) * cfg.branch_channels[-1]
        flat = cfg.trunk_channels * cfg.bottom**2
        shapes["trunk.conv.w"] = (cfg.trunk_channels, concat, _ENC_K, _ENC_K)
        shapes["trunk.conv.b"] = (cfg.trunk_channels,)
        shapes["trunk.dense.w"] = (flat, cfg.hidden_dim)
        shapes["trunk.dense.b"] = (cfg.hidden_dim,)
        shapes.update(self._head_shapes())
        shapes["decoder.dense.w"] = (cfg.latent_dim, flat)
        shapes["decoder.dense.b"] = (flat,)
        widths = self._decoder_widths()
        for i, (c_in, c_out) in enumerate(zip(widths[:-1], widths[1:])):
            shapes[f"decoder.deconv{i}.w"] = (c_in, c_out, _DEC_K, _DEC_K)
            shapes[f"decoder.deconv{i}.b"] = (c_out,)
        return shapes

    def _decoder_widths(self) -> List[int]:
        return [self._cfg.trunk_channels, *reversed(self._cfg.branch_channels[:-1]), 1]

    def _init_params(self, rng: np.random.Generator) -> Params:
        params: Params = {}
        for name, shape in self.param_shapes().items():
            if name.endswith(".b"):
                params[name] = np.zeros(shape, dtype=np.float32)
            elif len(shape) == 4:
                params[name] = kaiming_uniform(rng, shape, shape[1] * shape[2] * shape[3])
            else:
                params[name] = kaiming_uniform(rng, shape, shape[0])
        return params

    def load_params(self, params: Params) -> None:
        """
        Replace parameters by name.

        Raises:
            UnknownParameter: A name not in this model, or a missing one
            ShapeMismatch: A tensor with the wrong dims
        """
        expected = self.param_shapes()
        unknown = sorted(set(params) - set(expected))
        if unknown:
            raise UnknownParameter(f"{self.kind} model has no parameters {unknown}")
        missing = sorted(set(expected) - set(params))
        if missing:
            raise UnknownParameter(f"Parameters {missing} missing for {self.kind} model")
        for name, shape in expected.items():
            if tuple(params[name].shape) != shape:
                raise ShapeMismatch(f"'{name}' is {params[name].shape}, expected {shape}")
        self.params = {k: np.array(params[k], copy=True) for k in expected}

    def copy(self) -> "HeatmapNet":
        return type(self)(self._cfg, params=self.params)

    def astype(self, dtype) -> "HeatmapNet":
        """Copy with parameters cast (f64 for gradient checks)."""
        clone = self.copy()
        clone.params = {k: v.astype(dtype) for k, v in clone.params.items()}
        return clone

    def check_input(self, x: np.ndarray) -> None:
        cfg = self._cfg
        expected = (cfg.in_channels, cfg.resolution, cfg.resolution)
        if x.ndim != 4 or tuple(x.shape[1:]) != expected:
            raise ShapeMismatch(f"Model expects (N, *{expected}), got {x.shape}")

    # encoder

    def _encode_trunk(self, x: np.ndarray) -> Tuple[np.ndarray, Dict[str, Any]]:
        p = self.params
        cache: Dict[str, Any] = {"branches": {}}
        feats = []
        for name, group in self._cfg.groups():
            a = x[:, group]
            layers = []
            for i in range(len(self._cfg.branch_channels)):
                z = conv2d(a, p[f"{name}.conv{i}.w"], p[f"{name}.conv{i}.b"], stride=2, pad=1)
                layers.append((a, z))
                a = leaky_relu(z)
            cache["branches"][name] = layers
            feats.append(a)
        cat = np.concatenate(feats, axis=1)
        z_trunk = conv2d(cat, p["trunk.conv.w"], p["trunk.conv.b"], stride=1, pad=1)
        flat = leaky_relu(z_trunk).reshape(len(x), -1)
        z_dense = dense(flat, p["trunk.dense.w"], p["trunk.dense.b"])
        cache.update(x_shape=x.shape, cat=cat, z_trunk=z_trunk, flat=flat, z_dense=z_dense)
        return leaky_relu(z_dense), cache

    def _encode_trunk_backward(self, dh: np.ndarray, cache: Dict[str, Any], grads: Params) -> None:
        p = self.params
        dz = leaky_relu_backward(dh, cache["z_dense"])
        dflat, grads["trunk.dense.w"], grads["trunk.dense.b"] = dense_backward(
            dz, cache["flat"], p["trunk.dense.w"]
        )
        dz = leaky_relu_backward(dflat.reshape(cache["z_trunk"].shape), cache["z_trunk"])
        dcat, grads["trunk.conv.w"], grads["trunk.conv.b"] = conv2d_backward(
            dz, cache["cat"], p["trunk.conv.w"], stride=1, pad=1
        )
        width = self._cfg.branch_channels[-1]
        for k, (name, _) in enumerate(self._cfg.groups()):
            da = dcat[:, k * width : (k + 1) * width]
            for i in reversed(range(len(self._cfg.branch_channels))):
                a, z = cache["branches"][name][i]
                dz = leaky_relu_backward(da, z)
                da, grads[f"{name}.conv{i}.w"], grads[f"{name}.conv{i}.b"] = conv2d_backward(
                    dz, a, p[f"{name}.conv{i}.w"], stride=2, pad=1
                )

    # decoder

    def _decode(self, z: np.ndarray) -> Tuple[np.ndarray, Dict[str, Any]]:
        cfg, p = self._cfg, self.params
        if z.ndim != 2 or z.shape[1] != cfg.latent_dim:
            raise ShapeMismatch(f"Latent must be (N, {cfg.latent_dim}), got {z.shape}")
        z_dense = dense(z, p["decoder.dense.w"], p["decoder.dense.b"])
        a = leaky_relu(z_dense).reshape(len(z), cfg.trunk_channels, cfg.bottom, cfg.bottom)
        layers = []
        n_deconv = len(self._decoder_widths()) - 1
        for i in range(n_deconv):
            w, b = p[f"decoder.deconv{i}.w"], p[f"decoder.deconv{i}.b"]
            zc = conv2d_transpose(a, w, b, stride=2, pad=1)
            layers.append((a, zc))
            a = sigmoid(zc) if i == n_deconv - 1 else leaky_relu(zc)
        return a[:, 0], {"z": z, "z_dense": z_dense, "layers": layers, "out": a}

    def _decode_backward(
        self, dout: np.ndarray, cache: Dict[str, Any], grads: Params
    ) -> np.ndarray:
        p = self.params
        layers = cache["layers"]
        da = dout[:, None]
        for i in reversed(range(len(layers))):
            a, zc = layers[i]
            if i == len(layers) - 1:
                dz = sigmoid_backward(da, cache["out"])
            else:
                dz = leaky_relu_backward(da, zc)
            w = p[f"decoder.deconv{i}.w"]
            da, dw, db = conv2d_transpose_backward(dz, a, w, stride=2, pad=1)
            grads[f"decoder.deconv{i}.w"], grads[f"decoder.deconv{i}.b"] = dw, db
        dz = leaky_relu_backward(da.reshape(cache["z_dense"].shape), cache["z_dense"])
        dlatent, grads["decoder.dense.w"], grads["decoder.dense.b"] = dense_backward(
            dz, cache["z"], p["decoder.dense.w"]
        )
        return dlatent

    def decode(self, z: np.ndarray) -> np.ndarray:
        """(N, latent_dim) -> (N, R, R) in [0, 1]."""
        return self._decode(z)[0]

    # training interface

    def forward_train(
        self, x: np.ndarray, noise: Optional[np.ndarray] = None
    ) -> Tuple[np.ndarray, Dict[str, np.ndarray], Dict[str, Any]]:
        """Prediction, latent statistics for the loss, and the backward cache."""
        raise NotImplementedError

    def backward(
        self,
        dpred: np.ndarray,
        cache: Dict[str, Any],
        dstats: Optional[Dict[str, np.ndarray]] = None,
    ) -> Params:
        """Parameter gradients given dL/dpred and direct gradients on the latent statistics."""
        raise NotImplementedError

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Deterministic (N, R, R) prediction."""
        raise NotImplementedError


class HeatmapVAE(HeatmapNet):
    """Three-branch variational autoencoder."""

    kind = "vae"

    def _head_shapes(self) -> Dict[str, Tuple[int, ...]]:
        cfg = self._cfg
        return {
            "mu_head.w": (cfg.hidden_dim, cfg.latent_dim),
            "mu_head.b": (cfg.latent_dim,),
            "logvar_head.w": (cfg.hidden_dim, cfg.latent_dim),
            "logvar_head.b": (cfg.latent_dim,),
        }

    def _encode(self, x: np.ndarray):
        self.check_input(x)
        p, c = self.params, self._cfg.logvar_clamp
        h, cache = self._encode_trunk(x)
        mu = dense(h, p["mu_head.w"], p["mu_head.b"])
        raw = dense(h, p["logvar_head.w"], p["logvar_head.b"])
        cache.update(h=h, logvar_raw=raw)
        return mu, np.clip(raw, -c, c), cache

    def encode(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Posterior parameters.

        Args:
            x (np.ndarray): (N, C, R, R) model inputs

        Returns:
            Tuple[np.ndarray, np.ndarray]: mu and clamped logvar, each (N, latent_dim)
        """
        mu, logvar, _ = self._encode(x)
        return mu, logvar

    def forward_train(self, x, noise=None):
        mu, logvar, cache = self._encode(x)
        if noise is None:
            noise = np.zeros_like(mu)
        noise = noise.astype(mu.dtype, copy=False)
        z = reparameterize(mu, logvar, noise)
        pred, dec_cache = self._decode(z)
        cache.update(decoder=dec_cache, noise=noise, logvar=logvar)
        return pred, {"mu": mu, "logvar": logvar}, cache

    def backward(self, dpred, cache, dstats=None):
        p, c = self.params, self._cfg.logvar_clamp
        grads: Params = {}
        dz = self._decode_backward(dpred, cache["decoder"], grads)
        dstats = dstats or {}
        std = np.exp(0.5 * cache["logvar"])
        dmu = dz + dstats.get("mu", 0.0)
        dlogvar = dz * cache["noise"] * 0.5 * std + dstats.get("logvar", 0.0)
        raw = cache["logvar_raw"]
        # clamped entries pass no gradient
        dlogvar = np.where((raw >= -c) & (raw <= c), dlogvar, 0.0).astype(raw.dtype)

        h = cache["h"]
        dh_mu, grads["mu_head.w"], grads["mu_head.b"] = dense_backward(dmu, h, p["mu_head.w"])
        dh_lv, grads["logvar_head.w"], grads["logvar_head.b"] = dense_backward(
            dlogvar, h, p["logvar_head.w"]
        )
        self._encode_trunk_backward(dh_mu + dh_lv, cache, grads)
        return grads

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Eval mode: decode the posterior mean."""
        mu, _ = self.encode(x)
        return self.decode(mu)

    def sample(self, x: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """
        Heatmaps decoded from posterior draws.

        Args:
            x (np.ndarray): (N, C, R, R) inputs
            noise (np.ndarray): (k, N, latent_dim) standard normal draws

        Returns:
            np.ndarray: (k, N, R, R)
        """
        mu, logvar = self.encode(x)
        if noise.ndim != 3 or noise.shape[1:] != mu.shape:
            raise ShapeMismatch(f"Noise must be (k, *{mu.shape}), got {noise.shape}")
        draws = [reparameterize(mu, logvar, n.astype(mu.dtype)) for n in noise]
        return np.stack([self.decode(z) for z in draws])


class HeatmapAutoencoder(HeatmapNet):
    """Deterministic AE baseline: same encoder and decoder, dense bottleneck."""

    kind = "ae"

    def _head_shapes(self) -> Dict[str, Tuple[int, ...]]:
        cfg = self._cfg
        return {
            "bottleneck.w": (cfg.hidden_dim, cfg.latent_dim),
            "bottleneck.b": (cfg.latent_dim,),
        }

    def encode(self, x: np.ndarray) -> np.ndarray:
        self.check_input(x)
        h, _ = self._encode_trunk(x)
        return dense(h, self.params["bottleneck.w"], self.params["bottleneck.b"])

    def forward_train(self, x, noise=None):
        self.check_input(x)
        h, cache = self._encode_trunk(x)
        z = dense(h, self.params["bottleneck.w"], self.params["bottleneck.b"])
        pred, dec_cache = self._decode(z)
        cache.update(h=h, decoder=dec_cache)
        return pred, {}, cache

    def backward(self, dpred, cache, dstats=None):
        grads: Params = {}
        dz = self._decode_backward(dpred, cache["decoder"], grads)
        dh, grads["bottleneck.w"], grads["bottleneck.b"] = dense_backward(
            dz, cache["h"], self.params["bottleneck.w"]
        )
        self._encode_trunk_backward(dh, cache, grads)
        return grads

    def forward(self, x: np.ndarray) -> np.ndarray:
        """(N, C, R, R) -> (N, R, R) in [0, 1]."""
        return self.decode(self.encode(x))

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)


MODEL_KINDS = {HeatmapVAE.kind: HeatmapVAE, HeatmapAutoencoder.kind: HeatmapAutoencoder}


def build_model(kind: str, cfg: Optional[ModelConfig] = None, seed: int = 0) -> HeatmapNet:
    """Fresh model of the given kind ("vae" or "ae")."""
    try:
        model_cls = MODEL_KINDS[kind]
    except KeyError as e:
        raise ConfigError(f"Unknown model kind '{kind}', expected {sorted(MODEL_KINDS)}") from e
    model = model_cls(cfg, seed=seed)
    logger.debug(f"Built {kind} with {model.param_count} parameters")
    return model
