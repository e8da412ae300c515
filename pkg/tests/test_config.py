import json
import logging

import pytest

from warehouse_sinr.exceptions import ConfigError
from warehouse_sinr.utils.config import (
    LOG_ENV,
    THREADS_ENV,
    RunConfig,
    config_hash,
    configure_logging,
)


def test_defaults():
    cfg = RunConfig()
    assert cfg.tensors.out_res == 64
    assert cfg.model.resolution == 64
    assert cfg.model.n_aux == 2
    assert cfg.scene.min_shelves == 19
    assert cfg.scene_seeds == [42, 43, 44, 45, 46]
    assert cfg.unseen_scene_seed == 47


def test_model_follows_tensor_layout():
    cfg = RunConfig.from_dict(
        {"tensors": {"out_res": 32, "include_shelf_mask": True}, "model": {"latent_dim": 8}}
    )
    assert cfg.model.resolution == 32
    assert cfg.model.n_aux == 3
    assert cfg.model.latent_dim == 8


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="colour"):
        RunConfig.from_dict({"colour": "red"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"propagation": {"carrier_ghz": 60}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"train": {"epochs": 0}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"scene": "big"})
    with pytest.raises(ConfigError):
        RunConfig(train_frac=1.0)


def test_hash_is_stable():
    cfg = RunConfig.from_dict({"seed": 3, "scene": {"width_m": 30, "depth_m": 20}})
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.hash == cfg.hash
    assert len(cfg.hash) == 12
    assert RunConfig().hash != cfg.hash
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})


def test_with_overrides():
    cfg = RunConfig().with_overrides(seed=9, epochs=3, lr=None, out_dir="elsewhere")
    assert cfg.seed == 9
    assert cfg.train.seed == 9
    assert cfg.train.epochs == 3
    assert cfg.train.lr == RunConfig().train.lr
    assert cfg.out_dir == "elsewhere"
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(epochs=0)
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(colour="red")


def test_load(tmp_path):
    assert RunConfig.load(None) == RunConfig()
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"n_scenes": 2, "train": {"epochs": 4}}))
    cfg = RunConfig.load(path)
    assert (cfg.n_scenes, cfg.train.epochs) == (2, 4)
    with pytest.raises(ConfigError, match="not found"):
        RunConfig.load(tmp_path / "missing.json")
    path.write_text("{")
    with pytest.raises(ConfigError, match="not valid JSON"):
        RunConfig.load(path)


def test_write_echoes_config(tmp_path):
    cfg = RunConfig(seed=5)
    target = cfg.write(tmp_path / "run")
    assert RunConfig.from_dict(json.loads(target.read_text())).hash == cfg.hash


def test_workers(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert RunConfig().workers == 1
    monkeypatch.setenv(THREADS_ENV, "4")
    assert RunConfig().workers == 4
    assert RunConfig(threads=2).workers == 2
    monkeypatch.setenv(THREADS_ENV, "many")
    assert RunConfig().workers == 1


def test_configure_logging(monkeypatch):
    monkeypatch.setenv(LOG_ENV, "debug")
    assert configure_logging() == logging.DEBUG
    assert logging.getLogger().level == logging.DEBUG
    assert configure_logging("error") == logging.ERROR
    monkeypatch.setenv(LOG_ENV, "chatty")
    assert configure_logging() == logging.INFO
