from dataclasses import replace

import numpy as np
import pytest

from warehouse_sinr.evaluation.metrics import error_heatmap
from warehouse_sinr.evaluation.scenarios import (
    EvalConfig,
    model_config_for,
    predict_batched,
    scenario_denoising,
    scenario_extrapolation,
    scenario_fewshot,
    scenario_validation,
)
from warehouse_sinr.exceptions import (
    ConfigError,
    InsufficientSamples,
    InvalidResolution,
)
from warehouse_sinr.models.networks import ModelConfig, build_model
from warehouse_sinr.scene.layout import ApDefaults, ApPlacement
from warehouse_sinr.tensors.dataset import TensorConfig, build_dataset
from warehouse_sinr.training.trainer import TrainConfig


@pytest.fixture
def vae(tiny_model_cfg):
    return build_model("vae", tiny_model_cfg, seed=0)


@pytest.fixture
def ae(tiny_model_cfg):
    return build_model("ae", tiny_model_cfg, seed=0)


def test_eval_config_validation():
    with pytest.raises(ConfigError):
        EvalConfig(shots=(16, 4))
    with pytest.raises(InvalidResolution):
        EvalConfig(lo_res=4)
    with pytest.raises(ConfigError):
        EvalConfig(train_quadrants=("I", "IV"), test_quadrant="IV")
    with pytest.raises(ConfigError):
        EvalConfig.from_dict({"shots": [1], "epochs": 3})
    cfg = EvalConfig(shots=(0, 8))
    assert EvalConfig.from_dict(cfg.to_dict()) == cfg


def test_model_config_for(small_dataset):
    cfg = model_config_for(small_dataset, ModelConfig(latent_dim=4))
    assert (cfg.resolution, cfg.n_aux, cfg.latent_dim) == (8, 2, 4)


def test_validation(vae, ae, small_dataset):
    report = scenario_validation(vae, ae, small_dataset, seed=1)
    assert set(report.per_model) == {"vae", "ae", "mean"}
    val_idx = small_dataset.indices("val")
    targets = small_dataset.targets(val_idx)
    norm = small_dataset.normalization
    preds = predict_batched(vae, small_dataset, val_idx, batch_size=32)
    maps = np.stack([error_heatmap(t, p, norm) for t, p in zip(targets, preds)])
    assert report.per_model["vae"].mae_db == pytest.approx(float(maps.mean()), rel=1e-6)
    assert report.per_model["vae"].n_samples == len(val_idx)
    assert len(report.per_model["vae"].error_maps) == 4
    mean_map = small_dataset.targets(small_dataset.indices("train")).astype(np.float64).mean(0)
    baseline = np.stack([error_heatmap(t, mean_map, norm) for t in targets])
    assert report.per_model["mean"].mae_db == pytest.approx(float(baseline.mean()), rel=1e-6)
    timing = report.extra["timing"]
    assert timing["vae_s_per_heatmap"] > 0
    assert timing["oracle_s_per_heatmap"] > 0


def test_validation_rejects_mismatched_model(small_dataset):
    wide = build_model("vae", ModelConfig(resolution=16, latent_dim=4, n_aux=2), seed=0)
    with pytest.raises(ConfigError):
        scenario_validation(wide, None, small_dataset)


def test_denoising_at_equal_resolution_is_exact(vae, ae, small_scene):
    aps = [ApPlacement(1.0, 1.0), ApPlacement(6.5, 3.0)]
    report = scenario_denoising(vae, small_scene, aps, hi_res=8, lo_res=8, ae=ae)
    assert report.extra["degenerate"] is True
    assert report.per_model["noisy"].mae_db < 1e-4
    assert set(report.per_model) == {"noisy", "vae", "ae"}
    assert report.per_model["vae"].mse_db is not None
    assert set(report.per_model["noisy"].error_maps) == {"ap0", "ap1"}


def test_denoising_coarse_input_has_error(tiny_model_cfg, small_scene):
    cfg16 = replace(tiny_model_cfg, resolution=16)
    vae16 = build_model("vae", cfg16, seed=0)
    report = scenario_denoising(vae16, small_scene, ApPlacement(2.5, 6.0), hi_res=16, lo_res=8)
    assert report.per_model["noisy"].mae_db > 0.0
    assert report.extra["degenerate"] is False


def test_denoising_errors(vae, small_scene):
    ap = ApPlacement(1.0, 1.0)
    with pytest.raises(InvalidResolution):
        scenario_denoising(vae, small_scene, ap, hi_res=8, lo_res=16)
    with pytest.raises(InvalidResolution):
        scenario_denoising(vae, small_scene, ap, hi_res=8, lo_res=4)
    with pytest.raises(InvalidResolution):
        scenario_denoising(vae, small_scene, ap, hi_res=16, lo_res=8)


def test_extrapolation(small_dataset, tiny_model_cfg):
    report = scenario_extrapolation(
        ["I", "II", "III"],
        "IV",
        small_dataset,
        model_cfg=tiny_model_cfg,
        train_cfg=TrainConfig(epochs=1, batch_size=4),
        seed=2,
    )
    assert set(report.per_model) == {"vae@val", "vae@IV", "ae@val", "ae@IV"}
    assert set(report.extra["quadrants_in_train_split"]) <= {"I", "II", "III"}
    assert report.extra["n_test"] == 4
    assert report.extra["n_train"] + report.extra["n_val"] == 12
    assert report.extra["sweep_quadrant_counts"] == {"I": 4, "II": 4, "III": 4, "IV": 4}
    assert set(report.extra["boundary"]) == {"vae", "ae"}
    assert report.per_model["vae@IV"].n_samples == 4


def test_fewshot(vae, small_dataset):
    cfg = EvalConfig(fewshot_epochs=2, fewshot_batch_size=2)
    report = scenario_fewshot(vae, small_dataset, shots=(0, 2, 4), cfg=cfg, seed=5)
    assert list(report.per_model) == ["vae@k=0", "vae@k=2", "vae@k=4"]
    assert report.extra["n_held_out"] == 12
    assert len(report.extra["train_order"]) == 4
    held = [i for i in range(16) if i not in report.extra["train_order"]]
    targets = small_dataset.targets(held)
    preds = predict_batched(vae, small_dataset, held, batch_size=32)
    norm = small_dataset.normalization
    untouched = np.mean([error_heatmap(t, p, norm) for t, p in zip(targets, preds)])
    assert report.per_model["vae@k=0"].mae_db == pytest.approx(float(untouched), rel=1e-6)
    assert report.per_model["vae@k=4"].mae_db != report.per_model["vae@k=0"].mae_db


def test_fewshot_leaves_pretrained_untouched(vae, small_dataset):
    before = {k: v.copy() for k, v in vae.params.items()}
    scenario_fewshot(vae, small_dataset, shots=(2,), cfg=EvalConfig(fewshot_epochs=1))
    for name, value in before.items():
        np.testing.assert_array_equal(vae.params[name], value)


def test_fewshot_from_scene(vae, ae, small_scene):
    cfg = EvalConfig(fewshot_epochs=1, fewshot_spacing_m=2.0)
    report = scenario_fewshot(vae, small_scene, shots=(0, 2), cfg=cfg, pretrained_ae=ae)
    assert set(report.per_model) == {"vae@k=0", "vae@k=2", "ae@k=0", "ae@k=2"}
    assert report.extra["n_pool"] == 16


def test_fewshot_needs_held_out_samples(vae, small_dataset):
    with pytest.raises(InsufficientSamples):
        scenario_fewshot(vae, small_dataset, shots=(0, 16))
    with pytest.raises(ConfigError):
        scenario_fewshot(vae, small_dataset, shots=(4, 2))


def test_fewshot_sweeps_with_configured_ap(vae, small_scene):
    low = ApDefaults(height_m=3.0)
    cfg = EvalConfig(fewshot_epochs=1, fewshot_spacing_m=2.0)
    pool = build_dataset([small_scene], 2.0, out_res=8, seed=0, ap=low)
    from_pool = scenario_fewshot(vae, pool, shots=(0, 2), cfg=cfg)
    from_scene = scenario_fewshot(vae, small_scene, shots=(0, 2), cfg=cfg, ap=low)
    stock = scenario_fewshot(vae, small_scene, shots=(0, 2), cfg=cfg)
    for label, result in from_pool.per_model.items():
        assert from_scene.per_model[label].mae_db == pytest.approx(result.mae_db, rel=1e-9)
    assert stock.per_model["vae@k=0"].mae_db != from_scene.per_model["vae@k=0"].mae_db


def test_extrapolation_sweeps_with_configured_ap(small_scene, tiny_model_cfg):
    low = ApDefaults(height_m=3.0)
    tensors = TensorConfig(out_res=8)
    kwargs = dict(model_cfg=tiny_model_cfg, train_cfg=TrainConfig(epochs=1, batch_size=4), seed=2)
    full = build_dataset(
        [small_scene], 2.0, out_res=8, train_frac=0.75, seed=2, tensor_cfg=tensors, ap=low
    )
    from_dataset = scenario_extrapolation(["I", "II", "III"], "IV", full, **kwargs)
    from_scenes = scenario_extrapolation(
        ["I", "II", "III"],
        "IV",
        [small_scene],
        sweep_spacing_m=2.0,
        tensor_cfg=tensors,
        ap=low,
        **kwargs,
    )
    for label, result in from_dataset.per_model.items():
        assert from_scenes.per_model[label].mae_db == pytest.approx(result.mae_db, rel=1e-9)
