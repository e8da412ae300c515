"""
The four evaluation scenarios: validation, denoising, quadrant extrapolation
and few-shot adaptation to an unseen layout.
"""

import logging
import time
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from warehouse_sinr.evaluation.metrics import (
    boundary_concentration,
    error_heatmap,
    mae_db,
    max_error_db,
    mse_db,
)
from warehouse_sinr.evaluation.reports import EvalReport, ModelResult
from warehouse_sinr.exceptions import (
    ConfigError,
    InsufficientSamples,
    InvalidResolution,
    WarehouseSinrError,
)
from warehouse_sinr.models.networks import HeatmapNet, ModelConfig, build_model
from warehouse_sinr.oracle.propagation import PropagationParams, sinr_heatmap
from warehouse_sinr.scene.geometry import MIN_CELLS
from warehouse_sinr.scene.layout import (
    ApDefaults,
    ApPlacement,
    WarehouseScene,
    rasterize_materials,
)
from warehouse_sinr.tensors.builders import los_channel, normalize_sinr, resize
from warehouse_sinr.tensors.dataset import (
    QUADRANTS,
    Dataset,
    TensorConfig,
    build_dataset,
    build_sample,
    quadrant_holdout,
)
from warehouse_sinr.training.trainer import TrainConfig, Trainer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalConfig:
    """
    Scenario settings.

    Attributes:
        n_error_maps (int): Error maps stored per model in the validation report
        shots (Tuple[int, ...]): Few-shot ladder, ascending
        fewshot_spacing_m (float): Sweep pitch for the unseen scene
        fewshot_epochs (int): Fine-tuning epochs per shot count
        fewshot_lr (float): Fine-tuning learning rate
        fewshot_batch_size (int): Fine-tuning batch cap
        lo_res (int): Coarse grid for the denoising input
        train_quadrants (Tuple[str, ...]): Quadrants trained on for extrapolation
        test_quadrant (str): Held-out quadrant
        boundary_radius (int): Cells around a LOS/NLOS transition counted as boundary
        batch_size (int): Inference batch size
    """

    n_error_maps: int = 4
    shots: Tuple[int, ...] = (4, 16, 64)
    fewshot_spacing_m: float = 2.5
    fewshot_epochs: int = 30
    fewshot_lr: float = 5e-4
    fewshot_batch_size: int = 8
    lo_res: int = 16
    train_quadrants: Tuple[str, ...] = ("I", "II", "III")
    test_quadrant: str = "IV"
    boundary_radius: int = 2
    batch_size: int = 32

    def __post_init__(self):
        if list(self.shots) != sorted(self.shots) or any(k < 0 for k in self.shots):
            raise ConfigError(f"shots must be ascending and >= 0, got {list(self.shots)}")
        if self.lo_res < MIN_CELLS:
            raise InvalidResolution(f"lo_res must be >= {MIN_CELLS}, got {self.lo_res}")
        quadrants = set(self.train_quadrants) | {self.test_quadrant}
        if not quadrants <= set(QUADRANTS):
            raise ConfigError(f"Unknown quadrants {sorted(quadrants - set(QUADRANTS))}")
        if self.test_quadrant in self.train_quadrants:
            raise ConfigError(f"Quadrant {self.test_quadrant} is both trained on and held out")
        if self.fewshot_epochs < 1 or self.fewshot_batch_size < 1 or self.batch_size < 1:
            raise ConfigError("fewshot_epochs, fewshot_batch_size and batch_size must be >= 1")

    def to_dict(self) -> Dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["shots"] = list(self.shots)
        data["train_quadrants"] = list(self.train_quadrants)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown eval config keys {sorted(unknown)}")
        data = dict(data)
        for key in ("shots", "train_quadrants"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


def predict_batched(model: HeatmapNet, dataset: Dataset, indices: Sequence[int], batch_size: int):
    """Eval-mode predictions (N, R, R) for the given samples."""
    indices = list(indices)
    chunks = [
        model.predict(dataset.inputs(indices[start : start + batch_size]))
        for start in range(0, len(indices), batch_size)
    ]
    if not chunks:
        return np.zeros((0, dataset.resolution, dataset.resolution), dtype=np.float32)
    return np.concatenate(chunks)


def _result(
    targets: np.ndarray,
    preds: np.ndarray,
    norm: Tuple[float, float],
    keep: Dict[str, int],
    with_mse: bool = False,
) -> ModelResult:
    maps = np.stack([error_heatmap(t, p, norm) for t, p in zip(targets, preds)])
    return ModelResult(
        mae_db=mae_db(maps),
        max_pixel_error_db=max_error_db(maps),
        mse_db=mse_db(maps) if with_mse else None,
        n_samples=len(maps),
        error_maps={label: maps[pos] for label, pos in keep.items()},
    )


def _labels(dataset: Dataset, indices: Sequence[int]) -> List[str]:
    return [
        f"scene{dataset.samples[i].meta.scene_id}_ap{dataset.samples[i].meta.ap_index}"
        for i in indices
    ]


def _check_compatible(model: HeatmapNet, dataset: Dataset) -> None:
    expected = (dataset.config.n_channels, dataset.resolution)
    found = (model.cfg.in_channels, model.cfg.resolution)
    if found != expected:
        raise ConfigError(
            f"{model.kind} model takes {found[0]} channels at {found[1]} px, "
            f"dataset has {expected[0]} at {expected[1]} px"
        )


def model_config_for(dataset: Dataset, base: Optional[ModelConfig] = None) -> ModelConfig:
    """Model config whose resolution and aux width match a dataset."""
    return replace(
        base or ModelConfig(),
        resolution=dataset.resolution,
        n_aux=len(dataset.config.aux_names),
    )


def scenario_validation(
    vae: HeatmapNet,
    ae: Optional[HeatmapNet],
    dataset: Dataset,
    cfg: Optional[EvalConfig] = None,
    seed: int = 0,
    params: Optional[PropagationParams] = None,
    ap: Optional[ApDefaults] = None,
) -> EvalReport:
    """
    Validation-split errors of the VAE, the AE and the per-pixel mean predictor.

    Also records the inference time per heatmap next to the oracle's time for
    the same placements.

    Raises:
        EmptySplit: No train or val samples
    """
    cfg = cfg or EvalConfig()
    val_idx = dataset.require("val")
    train_idx = dataset.require("train")
    norm = dataset.normalization
    targets = dataset.targets(val_idx)

    rng = np.random.default_rng(seed)
    n_maps = min(cfg.n_error_maps, len(val_idx))
    picked = sorted(int(p) for p in rng.choice(len(val_idx), size=n_maps, replace=False))
    labels = _labels(dataset, [val_idx[p] for p in picked])
    keep = dict(zip(labels, picked))

    report = EvalReport(scenario="validation", seed=seed, error_range_db=norm[1] - norm[0])
    timing: Dict[str, float] = {}
    models = [m for m in (vae, ae) if m is not None]
    for model in models:
        _check_compatible(model, dataset)
        start = time.perf_counter()
        preds = predict_batched(model, dataset, val_idx, cfg.batch_size)
        timing[f"{model.kind}_s_per_heatmap"] = (time.perf_counter() - start) / len(val_idx)
        report.per_model[model.kind] = _result(targets, preds, norm, keep)
        logger.info(f"Validation {model.kind}: MAE {report.per_model[model.kind].mae_db:.4f} dB")

    mean_map = dataset.targets(train_idx).astype(np.float64).mean(axis=0)
    baseline = np.broadcast_to(mean_map, targets.shape)
    report.per_model["mean"] = _result(targets, baseline, norm, keep)

    timing["oracle_s_per_heatmap"] = _oracle_seconds(dataset, val_idx[:3], params, ap)
    report.extra = {
        "n_val": len(val_idx),
        "n_train": len(train_idx),
        "error_map_samples": labels,
        "timing": timing,
    }
    return report


def _oracle_seconds(
    dataset: Dataset,
    indices: Sequence[int],
    params: Optional[PropagationParams],
    ap: Optional[ApDefaults] = None,
) -> float:
    ap = ap or ApDefaults()
    if not dataset.scenes or not indices:
        return float("nan")
    start = time.perf_counter()
    for i in indices:
        meta = dataset.samples[i].meta
        scene = WarehouseScene.from_dict(dataset.scenes[meta.scene_id])
        sinr_heatmap(scene, ap.place(meta.x_ap, meta.y_ap), p=params, out_res=dataset.resolution)
    return (time.perf_counter() - start) / len(indices)


def scenario_denoising(
    model: HeatmapNet,
    scene: WarehouseScene,
    ap: Union[ApPlacement, Sequence[ApPlacement]],
    hi_res: int,
    lo_res: int,
    tensor_cfg: Optional[TensorConfig] = None,
    params: Optional[PropagationParams] = None,
    ae: Optional[HeatmapNet] = None,
    seed: int = 0,
) -> EvalReport:
    """
    Recover a fine heatmap where only a pixelated one is available.

    Ground truth is the oracle at hi_res; the noisy heatmap is the oracle at
    lo_res, nearest-upsampled to hi_res. The models predict from the physics
    tensors at hi_res. MSE and MAE are reported for the noisy input and for
    every model.

    Raises:
        InvalidResolution: lo_res > hi_res, lo_res below 8, or hi_res not the model's
    """
    if lo_res > hi_res or lo_res < MIN_CELLS:
        raise InvalidResolution(f"Denoising needs {MIN_CELLS} <= lo_res <= hi_res, got {lo_res}")
    if model.cfg.resolution != hi_res:
        raise InvalidResolution(f"Model runs at {model.cfg.resolution} px, hi_res is {hi_res}")
    aps = [ap] if isinstance(ap, ApPlacement) else list(ap)
    cfg = replace(tensor_cfg or TensorConfig(), out_res=hi_res)
    norm = cfg.sinr_range_db
    coarse = rasterize_materials(scene, lo_res)

    truths, noisy, inputs = [], [], []
    for k, placement in enumerate(aps):
        sample = build_sample(scene, 0, placement, k, cfg, params)
        truths.append(sample.target.astype(np.float64))
        low = sinr_heatmap(scene, placement, p=params, out_res=lo_res, grid=coarse)
        noisy.append(resize(normalize_sinr(low, *norm), hi_res, mode="nearest"))
        inputs.append(sample.model_input(cfg))
    truths, noisy, x = np.stack(truths), np.stack(noisy), np.stack(inputs)
    keep = {f"ap{k}": k for k in range(min(len(aps), 4))}

    report = EvalReport(scenario="denoising", seed=seed, error_range_db=norm[1] - norm[0])
    report.per_model["noisy"] = _result(truths, noisy, norm, keep, with_mse=True)
    for m in (model, ae):
        if m is None:
            continue
        if m.cfg.in_channels != cfg.n_channels:
            raise ConfigError(
                f"{m.kind} model takes {m.cfg.in_channels} channels, not {cfg.n_channels}"
            )
        report.per_model[m.kind] = _result(truths, m.predict(x), norm, keep, with_mse=True)
    report.extra = {
        "hi_res": hi_res,
        "lo_res": lo_res,
        "n_aps": len(aps),
        "degenerate": lo_res == hi_res,
    }
    logger.info(
        f"Denoising {lo_res}->{hi_res}: noisy MSE {report.per_model['noisy'].mse_db:.4f}, "
        f"{model.kind} MSE {report.per_model[model.kind].mse_db:.4f}"
    )
    return report


def scenario_extrapolation(
    train_quadrants: Sequence[str],
    test_quadrant: str,
    source: Union[Dataset, Sequence[WarehouseScene]],
    cfg: Optional[EvalConfig] = None,
    model_cfg: Optional[ModelConfig] = None,
    train_cfg: Optional[TrainConfig] = None,
    seed: int = 0,
    train_frac: float = 0.75,
    sweep_spacing_m: float = 5.0,
    tensor_cfg: Optional[TensorConfig] = None,
    params: Optional[PropagationParams] = None,
    workers: int = 1,
    ap: Optional[ApDefaults] = None,
) -> EvalReport:
    """
    Train fresh VAE and AE on APs in train_quadrants and test on test_quadrant.

    Args:
        train_quadrants (Sequence[str]): Quadrants trained on
        test_quadrant (str): Held-out quadrant, not in train_quadrants
        source (Dataset or Sequence[WarehouseScene]): A full-sweep dataset, or scenes to sweep
        cfg (EvalConfig, optional): Boundary radius and inference batch size
        model_cfg, train_cfg: Settings of the fresh models
        seed (int): Split and model seed
        train_frac (float): Train/val split of the training quadrants
        sweep_spacing_m, tensor_cfg, params, workers: Used when source holds scenes
        ap (ApDefaults, optional): AP height/power/carrier of the sweep placements

    Returns:
        EvalReport: In-distribution val MAE and held-out MAE per model, plus the
            LOS/NLOS boundary concentration of the held-out errors

    Raises:
        EmptySplit: A quadrant has no APs
    """
    cfg = cfg or EvalConfig()
    train_cfg = train_cfg or TrainConfig(seed=seed)
    if isinstance(source, Dataset):
        full = source
    else:
        tensor_cfg = tensor_cfg or TensorConfig()
        full = build_dataset(
            source,
            sweep_spacing_m,
            out_res=tensor_cfg.out_res,
            train_frac=train_frac,
            seed=seed,
            params=params,
            tensor_cfg=tensor_cfg,
            ap=ap,
            workers=workers,
        )
    counts = {q: sum(s.meta.quadrant == q for s in full.samples) for q in QUADRANTS}
    holdout = quadrant_holdout(full, train_quadrants, test_quadrant, train_frac, seed)
    trained_on = sorted({holdout.samples[i].meta.quadrant for i in holdout.indices("train")})
    if test_quadrant in trained_on:
        raise WarehouseSinrError(f"Quadrant {test_quadrant} leaked into the train split")

    norm = holdout.normalization
    val_idx, test_idx = holdout.require("val"), holdout.require("test")
    val_t, test_t = holdout.targets(val_idx), holdout.targets(test_idx)
    los = [_los_mask(holdout, i, ap) for i in test_idx]
    keep = dict(zip(_labels(holdout, test_idx[: cfg.n_error_maps]), range(cfg.n_error_maps)))

    report = EvalReport(scenario="extrapolation", seed=seed, error_range_db=norm[1] - norm[0])
    boundary: Dict[str, Dict[str, float]] = {}
    for kind in ("vae", "ae"):
        model = build_model(kind, model_config_for(holdout, model_cfg), seed=seed)
        Trainer(model, train_cfg).fit(holdout)
        val_res = _result(val_t, predict_batched(model, holdout, val_idx, cfg.batch_size), norm, {})
        test_pred = predict_batched(model, holdout, test_idx, cfg.batch_size)
        test_res = _result(test_t, test_pred, norm, keep)
        report.per_model[f"{kind}@val"] = val_res
        report.per_model[f"{kind}@{test_quadrant}"] = test_res

        near, far = [], []
        for t, p, mask in zip(test_t, test_pred, los):
            n, f = boundary_concentration(error_heatmap(t, p, norm), mask, cfg.boundary_radius)
            near.append(n)
            far.append(f)
        boundary[kind] = {
            "near_boundary_mae_db": float(np.nanmean(near)) if not np.all(np.isnan(near)) else None,
            "far_mae_db": float(np.nanmean(far)) if not np.all(np.isnan(far)) else None,
        }
        logger.info(
            f"Extrapolation {kind}: val MAE {val_res.mae_db:.4f} dB, "
            f"quadrant {test_quadrant} MAE {test_res.mae_db:.4f} dB"
        )

    report.extra = {
        "train_quadrants": list(train_quadrants),
        "test_quadrant": test_quadrant,
        "quadrants_in_train_split": trained_on,
        "sweep_quadrant_counts": counts,
        "n_train": len(holdout.indices("train")),
        "n_val": len(val_idx),
        "n_test": len(test_idx),
        "boundary": boundary,
    }
    return report


def _los_mask(dataset: Dataset, i: int, ap: Optional[ApDefaults] = None) -> np.ndarray:
    sample = dataset.samples[i]
    if sample.aux is not None:
        return sample.aux[0]
    meta = sample.meta
    scene = WarehouseScene.from_dict(dataset.scenes[meta.scene_id])
    grid = rasterize_materials(scene, dataset.resolution)
    return los_channel(grid, (ap or ApDefaults()).place(meta.x_ap, meta.y_ap))


def scenario_fewshot(
    pretrained: HeatmapNet,
    new_scene: Union[WarehouseScene, Dataset],
    shots: Optional[Sequence[int]] = None,
    cfg: Optional[EvalConfig] = None,
    seed: int = 0,
    beta_kl: float = 1e-3,
    tensor_cfg: Optional[TensorConfig] = None,
    params: Optional[PropagationParams] = None,
    pretrained_ae: Optional[HeatmapNet] = None,
    workers: int = 1,
    ap: Optional[ApDefaults] = None,
) -> EvalReport:
    """
    Fine-tune copies of a pretrained model on k samples of an unseen layout.

    Training sets are nested prefixes of one seeded permutation of the new
    scene's sweep; every k is scored on the samples outside the largest set.
    k = 0 scores the pretrained model as is.

    Raises:
        InsufficientSamples: max(shots) leaves no held-out sample
    """
    cfg = cfg or EvalConfig()
    shots = list(cfg.shots if shots is None else shots)
    if not shots or shots != sorted(shots) or shots[0] < 0:
        raise ConfigError(f"shots must be non-empty, ascending and >= 0, got {shots}")
    if isinstance(new_scene, Dataset):
        pool = new_scene
    else:
        pool = build_dataset(
            [new_scene],
            cfg.fewshot_spacing_m,
            out_res=pretrained.cfg.resolution,
            seed=seed,
            params=params,
            tensor_cfg=tensor_cfg,
            ap=ap,
            workers=workers,
        )
    _check_compatible(pretrained, pool)
    n = len(pool)
    if shots[-1] >= n:
        raise InsufficientSamples(
            f"{shots[-1]} shots requested but the new scene only has {n} samples"
        )

    order = [int(i) for i in np.random.default_rng(seed).permutation(n)]
    held = order[shots[-1] :]
    norm = pool.normalization
    targets = pool.targets(held)
    keep = dict(zip(_labels(pool, held[:1]), [0]))

    report = EvalReport(scenario="fewshot", seed=seed, error_range_db=norm[1] - norm[0])
    for base in (pretrained, pretrained_ae):
        if base is None:
            continue
        for k in shots:
            model = base.copy()
            if k > 0:
                tuned = pool.subset(order[:k], split=["train"] * k)
                tune_cfg = TrainConfig(
                    epochs=cfg.fewshot_epochs,
                    batch_size=min(k, cfg.fewshot_batch_size),
                    lr=cfg.fewshot_lr,
                    beta_kl=beta_kl,
                    seed=seed,
                )
                Trainer(model, tune_cfg).fit(tuned, require_val=False)
            preds = predict_batched(model, pool, held, cfg.batch_size)
            result = _result(targets, preds, norm, keep)
            report.per_model[f"{base.kind}@k={k}"] = result
            logger.info(f"Few-shot {base.kind} k={k}: MAE {result.mae_db:.4f} dB")

    report.extra = {
        "shots": shots,
        "n_pool": n,
        "n_held_out": len(held),
        "train_order": order[: shots[-1]],
    }
    return report
