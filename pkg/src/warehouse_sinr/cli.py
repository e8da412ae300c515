"""
Command-line entry point: gen, train, eval, predict and export.

Exit codes: 0 success, 1 internal or numeric failure, 2 user/input error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from warehouse_sinr.evaluation.reports import SCENARIOS, write_report
from warehouse_sinr.evaluation.scenarios import (
    model_config_for,
    scenario_denoising,
    scenario_extrapolation,
    scenario_fewshot,
    scenario_validation,
)
from warehouse_sinr.exceptions import ConfigError, InvalidScene, WarehouseSinrError
from warehouse_sinr.models.networks import HeatmapNet, HeatmapVAE, build_model
from warehouse_sinr.oracle.propagation import sinr_heatmap
from warehouse_sinr.scene.layout import (
    ApDefaults,
    LayoutSpec,
    WarehouseScene,
    ap_sweep_positions,
    generate_layout,
)
from warehouse_sinr.storage.checkpoints import Checkpoint, read_checkpoint
from warehouse_sinr.storage.containers import read_dataset, sha256_file, write_dataset
from warehouse_sinr.storage.png_export import export_heatmap_png
from warehouse_sinr.tensors.builders import denormalize_sinr
from warehouse_sinr.tensors.dataset import (
    QUADRANTS,
    Dataset,
    TensorConfig,
    build_dataset,
    placement_inputs,
)
from warehouse_sinr.training.trainer import LossTrace, Trainer
from warehouse_sinr.utils.config import RunConfig, configure_logging

logger = logging.getLogger("warehouse_sinr.cli")

DATASET_NAME = "dataset.wsv"


def _point(text: str) -> Tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected x,y in meters, got '{text}'") from e
    return x, y


def _shots(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from e


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config).with_overrides(
        seed=args.seed,
        out_dir=str(args.out) if args.out is not None else None,
        threads=args.threads,
        train_frac=getattr(args, "train_frac", None),
        samples=getattr(args, "samples_cap", None),
        epochs=getattr(args, "epochs", None),
    )
    logger.debug(f"Effective config hash {cfg.hash}")
    return cfg


def _scenes(cfg: RunConfig) -> List[WarehouseScene]:
    return [generate_layout(seed, cfg.scene) for seed in cfg.scene_seeds]


def _load_model(path: Path, expected_kind: Optional[str] = None) -> Tuple[HeatmapNet, str]:
    return read_checkpoint(path).to_model(expected_kind), sha256_file(path)[:12]


def _trained_tensor_config(checkpoint: Checkpoint, cfg: RunConfig) -> TensorConfig:
    # the tensor layout the model was trained on wins over the run config
    trained_on = checkpoint.provenance.get("tensor_config")
    return TensorConfig.from_dict(trained_on) if trained_on else cfg.tensors


# gen


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = build_dataset(
        _scenes(cfg),
        cfg.sweep_spacing_m,
        out_res=cfg.tensors.out_res,
        train_frac=cfg.train_frac,
        seed=cfg.seed,
        params=cfg.propagation,
        tensor_cfg=cfg.tensors,
        ap=cfg.scene.ap,
        max_samples=cfg.samples,
        workers=cfg.workers,
    )
    path = write_dataset(dataset, out / DATASET_NAME, config_hash=cfg.hash)
    cfg.write(out)
    print(f"{len(dataset)} samples written to {path}")
    print(f"{len(dataset.indices('train'))} train / {len(dataset.indices('val'))} val")
    return 0


# train


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    dataset = read_dataset(args.dataset)
    out = Path(cfg.out_dir)
    checkpoint_path = out / f"{args.model}.wsc"
    provenance = {
        "dataset_hash": sha256_file(args.dataset)[:12],
        "config_hash": cfg.hash,
        "tensor_config": dataset.config.to_dict(),
        "normalization": list(dataset.normalization),
    }

    resume = read_checkpoint(args.resume) if args.resume else None
    if resume is not None:
        model = resume.to_model(args.model)
    else:
        model = build_model(args.model, model_config_for(dataset, cfg.model), seed=cfg.seed)
    trainer = Trainer(model, cfg.train, checkpoint_path=checkpoint_path, provenance=provenance)
    trace = trainer.fit(dataset, resume=resume)

    trace.to_csv(out / f"{args.model}_trace.csv")
    cfg.write(out)
    print(f"{len(trace)} epochs, final val MAE {trace.val_mae[-1]:.6f}")
    print(f"Checkpoint written to {checkpoint_path}")
    return 0


# eval


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    eval_cfg = cfg.eval
    hashes = {}
    vae = ae = None
    tensor_cfg = cfg.tensors
    if args.vae:
        checkpoint = read_checkpoint(args.vae)
        vae, hashes["vae"] = checkpoint.to_model("vae"), sha256_file(args.vae)[:12]
        tensor_cfg = _trained_tensor_config(checkpoint, cfg)
    if args.ae:
        ae, hashes["ae"] = _load_model(args.ae, "ae")
    dataset: Optional[Dataset] = read_dataset(args.dataset) if args.dataset else None
    if dataset is not None:
        hashes["dataset"] = sha256_file(args.dataset)[:12]

    if args.scenario == "validation":
        if vae is None or dataset is None:
            raise ConfigError("validation needs --vae and --dataset")
        report = scenario_validation(
            vae, ae, dataset, eval_cfg, seed=cfg.seed, params=cfg.propagation, ap=cfg.scene.ap
        )
    elif args.scenario == "denoising":
        if vae is None:
            raise ConfigError("denoising needs --vae")
        scene = generate_layout(cfg.scene_seeds[0], cfg.scene)
        aps = ap_sweep_positions(scene, cfg.sweep_spacing_m, cfg.scene.ap)
        report = scenario_denoising(
            vae,
            scene,
            aps,
            hi_res=vae.cfg.resolution,
            lo_res=args.lo_res or eval_cfg.lo_res,
            tensor_cfg=tensor_cfg,
            params=cfg.propagation,
            ae=ae,
            seed=cfg.seed,
        )
    elif args.scenario == "extrapolation":
        test_quadrant = args.test_quadrant or eval_cfg.test_quadrant
        if args.test_quadrant is None:
            train_quadrants = list(eval_cfg.train_quadrants)
        else:
            train_quadrants = [q for q in QUADRANTS if q != test_quadrant]
        report = scenario_extrapolation(
            train_quadrants,
            test_quadrant,
            dataset if dataset is not None else _scenes(cfg),
            cfg=eval_cfg,
            model_cfg=cfg.model,
            train_cfg=cfg.train,
            seed=cfg.seed,
            train_frac=cfg.train_frac,
            sweep_spacing_m=cfg.sweep_spacing_m,
            tensor_cfg=cfg.tensors,
            params=cfg.propagation,
            workers=cfg.workers,
            ap=cfg.scene.ap,
        )
    else:
        if vae is None:
            raise ConfigError("fewshot needs --vae")
        new_scene = generate_layout(cfg.unseen_scene_seed, cfg.scene)
        report = scenario_fewshot(
            vae,
            new_scene,
            shots=args.shots,
            cfg=eval_cfg,
            seed=cfg.seed,
            beta_kl=cfg.train.beta_kl,
            tensor_cfg=cfg.tensors,
            params=cfg.propagation,
            pretrained_ae=ae,
            workers=cfg.workers,
            ap=cfg.scene.ap,
        )

    report.config = {**cfg.to_dict(), "artifacts": hashes}
    report.config_hash = cfg.hash
    out = write_report(report, cfg.out_dir)
    cfg.write(out)
    for label, result in report.per_model.items():
        print(f"{label}: MAE {result.mae_db:.6f} dB, max {result.max_pixel_error_db:.4f} dB")
    return 0


# predict


def _predict_scene(args: argparse.Namespace, cfg: RunConfig) -> Tuple[WarehouseScene, ApDefaults]:
    """
    Scene and AP defaults for predict.

    A scene file holding "shelves" is used as is; otherwise it is a layout spec
    and the scene is generated from its "seed". An "ap" block in the file
    overrides the config's AP defaults.
    """
    if not args.scene:
        return generate_layout(cfg.scene_seeds[0], cfg.scene), cfg.scene.ap
    try:
        doc = json.loads(Path(args.scene).read_text())
        ap = ApDefaults.from_dict(doc["ap"]) if "ap" in doc else cfg.scene.ap
        if "shelves" in doc:
            return WarehouseScene.from_dict(doc), ap
        spec = LayoutSpec.from_dict(doc)
        seed = int(doc.get("seed", cfg.scene_seeds[0]))
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        raise InvalidScene(f"Scene file {args.scene} is not a scene document ({e})") from e
    logger.info(f"Generating layout for predict from {args.scene} with seed {seed}")
    return generate_layout(seed, spec), ap


def cmd_predict(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    checkpoint = read_checkpoint(args.checkpoint)
    model = checkpoint.to_model()
    scene, ap_defaults = _predict_scene(args, cfg)
    ap = ap_defaults.place(*args.ap)
    if not scene.contains(ap.x_ap, ap.y_ap):
        raise InvalidScene(
            f"AP at ({ap.x_ap}, {ap.y_ap}) is outside the {scene.width_m}x{scene.depth_m} m floor"
        )

    tensor_cfg = _trained_tensor_config(checkpoint, cfg)
    lo, hi = tensor_cfg.sinr_range_db

    x = placement_inputs(scene, ap, tensor_cfg)[None]
    pred_db = denormalize_sinr(model.predict(x)[0], lo, hi)
    out = Path(args.output)
    export_heatmap_png(pred_db, (lo, hi), out)
    np.save(out.with_suffix(".npy"), pred_db)
    print(f"Prediction written to {out}")

    if args.samples:
        if not isinstance(model, HeatmapVAE):
            raise ConfigError("--samples needs a VAE checkpoint")
        rng = np.random.default_rng(cfg.seed)
        noise = rng.standard_normal((args.samples, 1, model.cfg.latent_dim)).astype(np.float32)
        draws = denormalize_sinr(model.sample(x, noise)[:, 0], lo, hi)
        spread = draws.std(axis=0)
        spread_path = out.with_name(f"{out.stem}_std.png")
        export_heatmap_png(spread, (0.0, max(float(spread.max()), 1e-6)), spread_path)
        np.save(spread_path.with_suffix(".npy"), spread)
        print(f"Spread of {args.samples} posterior samples written to {spread_path}")

    if args.oracle or args.interferer:
        others = [ap_defaults.place(*p) for p in args.interferer or []]
        heatmap = sinr_heatmap(
            scene, ap, others=others, p=cfg.propagation, out_res=model.cfg.resolution
        )
        oracle_path = out.with_name(f"{out.stem}_oracle.png")
        export_heatmap_png(heatmap.values, (lo, hi), oracle_path)
        np.save(oracle_path.with_suffix(".npy"), heatmap.values)
        print(f"Oracle heatmap ({len(others)} interferers) written to {oracle_path}")
    return 0


# export


def cmd_export(args: argparse.Namespace) -> int:
    if args.trace:
        checkpoint = read_checkpoint(args.trace)
        target = Path(args.output or f"{checkpoint.kind}_trace.csv")
        LossTrace.from_dict(checkpoint.trace).to_csv(target)
        print(f"Loss trace ({checkpoint.epoch} epochs) written to {target}")
        return 0
    if not args.dataset:
        raise ConfigError("export needs --dataset or --trace")

    dataset = read_dataset(args.dataset)
    if not 0 <= args.index < len(dataset):
        raise ConfigError(f"Sample index {args.index} outside 0..{len(dataset) - 1}")
    sample = dataset.samples[args.index]
    out = Path(args.output or "export")
    for name, channel in zip(dataset.channel_names, sample.channels()):
        lo, hi = float(channel.min()), float(channel.max())
        export_heatmap_png(channel, (lo, hi if hi > lo else lo + 1.0), out / f"{name}.png")
    lo, hi = dataset.normalization
    export_heatmap_png(denormalize_sinr(sample.target, lo, hi), (lo, hi), out / "target.png")
    print(f"{len(dataset.channel_names) + 1} images for sample {args.index} written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run config")
    common.add_argument("--seed", type=int, help="Global seed")
    common.add_argument("--out", type=Path, help="Output directory")
    common.add_argument("--threads", type=int, help="Worker cap (default WISVA_THREADS or 1)")

    parser = argparse.ArgumentParser(
        prog="warehouse-sinr", description="Warehouse SINR heatmap generation and prediction"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Generate scenes and a dataset")
    gen.add_argument("--train-frac", type=float, dest="train_frac")
    gen.add_argument(
        "--samples",
        type=int,
        dest="samples_cap",
        help="Keep only the first N samples of the sweep; N above the sweep size is an error",
    )
    gen.set_defaults(func=cmd_gen)

    train = sub.add_parser("train", parents=[common], help="Train a VAE or AE")
    train.add_argument("--dataset", type=Path, required=True)
    train.add_argument("--model", choices=["vae", "ae"], default="vae")
    train.add_argument("--epochs", type=int)
    train.add_argument("--resume", type=Path, help="Checkpoint to continue from")
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", parents=[common], help="Run an evaluation scenario")
    ev.add_argument("scenario", choices=SCENARIOS)
    ev.add_argument("--vae", type=Path)
    ev.add_argument("--ae", type=Path)
    ev.add_argument("--dataset", type=Path)
    ev.add_argument("--test-quadrant", choices=QUADRANTS, dest="test_quadrant")
    ev.add_argument("--shots", type=_shots)
    ev.add_argument("--lo-res", type=int, dest="lo_res")
    ev.add_argument("--epochs", type=int, help="Training epochs for extrapolation")
    ev.set_defaults(func=cmd_eval)

    predict = sub.add_parser("predict", parents=[common], help="Predict one heatmap")
    predict.add_argument("--checkpoint", type=Path, required=True)
    predict.add_argument("--scene", type=Path, help="Scene JSON (default: first config scene)")
    predict.add_argument("--ap", type=_point, required=True, help="AP position x,y in meters")
    predict.add_argument("--interferer", type=_point, action="append", help="Interfering AP x,y")
    predict.add_argument("--oracle", action="store_true", help="Also write the oracle heatmap")
    predict.add_argument("--samples", type=int, help="Posterior samples for a spread map")
    predict.add_argument("--output", type=Path, default=Path("prediction.png"))
    predict.set_defaults(func=cmd_predict)

    export = sub.add_parser("export", parents=[common], help="Export sample tensors or a trace")
    export.add_argument("--dataset", type=Path)
    export.add_argument("--index", type=int, default=0)
    export.add_argument("--trace", type=Path, help="Checkpoint whose loss trace to export")
    export.add_argument("--output", type=Path)
    export.set_defaults(func=cmd_export)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging()
    try:
        return args.func(args)
    except WarehouseSinrError as e:
        logger.error(f"❌ {args.command} failed: {type(e).__name__} - {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"❌ {args.command} failed: {type(e).__name__} - {e}")
        return 2
    except Exception:
        logger.exception(f"❌ {args.command} failed with an internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
