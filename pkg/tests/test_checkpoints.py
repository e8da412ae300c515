import numpy as np
import pytest

from warehouse_sinr.exceptions import (
    BadMagic,
    KindMismatch,
    StorageError,
    TruncatedFile,
    UnknownParameter,
)
from warehouse_sinr.models.networks import HeatmapAutoencoder, HeatmapVAE, build_model
from warehouse_sinr.nn.optim import AdamState
from warehouse_sinr.storage.checkpoints import Checkpoint, read_checkpoint, write_checkpoint


@pytest.fixture
def vae_checkpoint(tiny_model_cfg, rng):
    model = build_model("vae", tiny_model_cfg, seed=4)
    adam = AdamState.for_params(model.params, lr=5e-3)
    adam.step = 12
    for name in adam.m:
        adam.m[name][...] = rng.normal(size=adam.m[name].shape)
        adam.v[name][...] = rng.uniform(size=adam.v[name].shape)
    return Checkpoint.from_model(
        model,
        adam=adam,
        train_config={"epochs": 3, "lr": 5e-3},
        epoch=2,
        trace={"epoch": [1, 2], "train_mae": [0.3, 0.2], "val_mae": [float("nan"), 0.25]},
        rng_seed=11,
        provenance={"dataset_hash": "deadbeef", "config_hash": "0123456789ab"},
    )


def test_round_trip(vae_checkpoint, tmp_path):
    path = write_checkpoint(vae_checkpoint, tmp_path / "nested" / "vae.wsc")
    restored = read_checkpoint(path)
    assert restored.kind == "vae"
    assert restored.epoch == 2
    assert restored.rng_seed == 11
    assert restored.provenance == vae_checkpoint.provenance
    assert restored.model_config == vae_checkpoint.model_config
    assert restored.trace["train_mae"] == [0.3, 0.2]
    assert np.isnan(restored.trace["val_mae"][0])
    assert set(restored.params) == set(vae_checkpoint.params)
    for name, value in vae_checkpoint.params.items():
        np.testing.assert_array_equal(restored.params[name], value)
        assert restored.params[name].dtype == np.float32
    assert restored.adam.step == 12
    assert restored.adam.lr == 5e-3
    for name in vae_checkpoint.adam.m:
        np.testing.assert_array_equal(restored.adam.m[name], vae_checkpoint.adam.m[name])
        np.testing.assert_array_equal(restored.adam.v[name], vae_checkpoint.adam.v[name])


def test_rewrite_is_byte_identical(vae_checkpoint, tmp_path):
    first = write_checkpoint(vae_checkpoint, tmp_path / "a.wsc")
    second = write_checkpoint(read_checkpoint(first), tmp_path / "b.wsc")
    assert first.read_bytes() == second.read_bytes()


def test_without_optimizer_state(tiny_model_cfg, tmp_path):
    model = build_model("ae", tiny_model_cfg, seed=0)
    path = write_checkpoint(Checkpoint.from_model(model), tmp_path / "ae.wsc")
    restored = read_checkpoint(path)
    assert restored.adam is None
    rebuilt = restored.to_model("ae")
    assert isinstance(rebuilt, HeatmapAutoencoder)
    x = np.full((1, 5, 8, 8), 0.5, np.float32)
    np.testing.assert_array_equal(rebuilt.predict(x), model.predict(x))


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.wsc"
    path.write_bytes(b"WSV1" + b"\x00" * 64)
    with pytest.raises(BadMagic):
        read_checkpoint(path)
    path.write_bytes(b"WS")
    with pytest.raises(BadMagic):
        read_checkpoint(path)


def test_truncated(vae_checkpoint, tmp_path):
    path = write_checkpoint(vae_checkpoint, tmp_path / "vae.wsc")
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with pytest.raises(TruncatedFile):
        read_checkpoint(path)
    path.write_bytes(raw[:20])
    with pytest.raises(TruncatedFile):
        read_checkpoint(path)


def test_unsupported_version(vae_checkpoint, tmp_path):
    path = write_checkpoint(vae_checkpoint, tmp_path / "vae.wsc")
    raw = bytearray(path.read_bytes())
    raw[4] = 9
    path.write_bytes(bytes(raw))
    with pytest.raises(StorageError):
        read_checkpoint(path)


def test_kind_mismatch(vae_checkpoint, tiny_model_cfg):
    with pytest.raises(KindMismatch):
        vae_checkpoint.to_model("ae")
    with pytest.raises(KindMismatch):
        vae_checkpoint.load_into(HeatmapAutoencoder(tiny_model_cfg))
    assert isinstance(vae_checkpoint.to_model("vae"), HeatmapVAE)


def test_unknown_parameter(vae_checkpoint, tiny_model_cfg):
    vae_checkpoint.params["extra.w"] = np.zeros(2, np.float32)
    with pytest.raises(UnknownParameter):
        vae_checkpoint.load_into(HeatmapVAE(tiny_model_cfg))


def test_load_into_copies(vae_checkpoint, tiny_model_cfg):
    model = vae_checkpoint.load_into(HeatmapVAE(tiny_model_cfg, seed=99))
    model.params["mu_head.b"] += 1.0
    assert not np.array_equal(model.params["mu_head.b"], vae_checkpoint.params["mu_head.b"])
