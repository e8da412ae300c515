"""
Objective, single optimizer step and the epoch loop with checkpointing.
"""

import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from warehouse_sinr.exceptions import ConfigError, NonFiniteLoss
from warehouse_sinr.models.networks import HeatmapNet, Params
from warehouse_sinr.nn.optim import AdamState, adam_step
from warehouse_sinr.storage.checkpoints import Checkpoint, write_checkpoint
from warehouse_sinr.tensors.dataset import Dataset
from warehouse_sinr.training.losses import kl_divergence, kl_grad, mae_grad, mae_loss

TRACE_COLUMNS = ["epoch", "train_mae", "train_kl", "val_mae"]


@dataclass(frozen=True)
class TrainConfig:
    """
    Training hyperparameters.

    Attributes:
        epochs (int): Passes over the train split
        batch_size (int): Samples per optimizer step (the last batch may be short)
        lr (float): Adam learning rate
        beta_kl (float): Weight of the KL term
        seed (int): Seed for shuffling and reparameterization noise
        checkpoint_every (int): Write a checkpoint every n epochs, 0 for the end only
    """

    epochs: int = 100
    batch_size: int = 16
    lr: float = 1e-3
    beta_kl: float = 1e-3
    seed: int = 42
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.beta_kl < 0:
            raise ConfigError(f"beta_kl must be >= 0, got {self.beta_kl}")
        if self.checkpoint_every < 0:
            raise ConfigError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown train config keys {sorted(unknown)}")
        return cls(**data)


@dataclass
class LossTrace:
    """Per-epoch losses plus a per-step record."""

    epoch: List[int] = field(default_factory=list)
    train_mae: List[float] = field(default_factory=list)
    train_kl: List[float] = field(default_factory=list)
    val_mae: List[float] = field(default_factory=list)
    steps: List[Dict[str, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epoch)

    def record_epoch(self, epoch: int, train_mae: float, train_kl: float, val_mae: float):
        self.epoch.append(int(epoch))
        self.train_mae.append(float(train_mae))
        self.train_kl.append(float(train_kl))
        self.val_mae.append(float(val_mae))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({c: getattr(self, c) for c in TRACE_COLUMNS}, columns=TRACE_COLUMNS)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.9g")
        return path

    def to_dict(self) -> Dict[str, Any]:
        data = {c: list(getattr(self, c)) for c in TRACE_COLUMNS}
        data["steps"] = [dict(s) for s in self.steps]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LossTrace":
        if not data:
            return cls()
        return cls(
            epoch=[int(e) for e in data.get("epoch", [])],
            train_mae=[float(v) for v in data.get("train_mae", [])],
            train_kl=[float(v) for v in data.get("train_kl", [])],
            val_mae=[float(v) for v in data.get("val_mae", [])],
            steps=[dict(s) for s in data.get("steps", [])],
        )


@dataclass(frozen=True)
class LossComponents:
    """One batch's losses. total = mae + beta_kl * kl, in f64."""

    mae: float
    kl: float
    beta_kl: float

    @property
    def total(self) -> float:
        return self.mae + self.beta_kl * self.kl

    def is_finite(self) -> bool:
        return math.isfinite(self.mae) and math.isfinite(self.kl) and math.isfinite(self.total)


def objective(
    model: HeatmapNet,
    x: np.ndarray,
    target: np.ndarray,
    noise: Optional[np.ndarray],
    beta_kl: float,
) -> Tuple[LossComponents, Params]:
    """
    Loss components and parameter gradients for one batch.

    Args:
        model (HeatmapNet): VAE or AE
        x (np.ndarray): (N, C, R, R) inputs
        target (np.ndarray): (N, R, R) normalized targets
        noise (np.ndarray, optional): (N, latent_dim) reparameterization noise, ignored by the AE
        beta_kl (float): KL weight

    Returns:
        Tuple[LossComponents, Dict[str, np.ndarray]]: Losses and gradients of the total
    """
    pred, stats, cache = model.forward_train(x, noise)
    target = target.astype(pred.dtype, copy=False)
    mae = mae_loss(target, pred)
    dpred = mae_grad(target, pred)

    kl, dstats = 0.0, None
    if "mu" in stats:
        kl = kl_divergence(stats["mu"], stats["logvar"])
        dmu, dlogvar = kl_grad(stats["mu"], stats["logvar"])
        dstats = {"mu": beta_kl * dmu, "logvar": beta_kl * dlogvar}
    grads = model.backward(dpred, cache, dstats)
    return LossComponents(mae=mae, kl=kl, beta_kl=beta_kl), grads


def train_step(
    model: HeatmapNet,
    x: np.ndarray,
    target: np.ndarray,
    cfg: TrainConfig,
    opt_state: AdamState,
    noise: Optional[np.ndarray] = None,
) -> Tuple[LossComponents, AdamState]:
    """
    One Adam update on a batch.

    Raises:
        NonFiniteLoss: The loss or a gradient is NaN/inf; parameters are left untouched
    """
    if len(x) == 0:
        raise ConfigError("train_step needs a non-empty batch")
    losses, grads = objective(model, x, target, noise, cfg.beta_kl)
    if not losses.is_finite():
        raise NonFiniteLoss(f"Non-finite loss (mae={losses.mae}, kl={losses.kl})")
    bad = sorted(k for k, g in grads.items() if not np.all(np.isfinite(g)))
    if bad:
        raise NonFiniteLoss(f"Non-finite gradients in {bad} (mae={losses.mae}, kl={losses.kl})")
    adam_step(model.params, grads, opt_state)
    return losses, opt_state


def evaluate_mae(
    model: HeatmapNet, dataset: Dataset, indices: Sequence[int], batch_size: int = 32
) -> float:
    """Eval-mode MAE over the given samples, in normalized units."""
    indices = list(indices)
    if not indices:
        return float("nan")
    total, count = 0.0, 0
    for start in range(0, len(indices), batch_size):
        chunk = indices[start : start + batch_size]
        pred = model.predict(dataset.inputs(chunk))
        target = dataset.targets(chunk)
        total += float(np.abs(pred.astype(np.float64) - target.astype(np.float64)).sum())
        count += target.size
    return total / count


class Trainer:
    """
    Epoch loop over a dataset's train split.

    Shuffling and noise come from a generator seeded by (seed, epoch), so a
    run resumed from an end-of-epoch checkpoint continues exactly as the
    uninterrupted one.
    """

    def __init__(
        self,
        model: HeatmapNet,
        cfg: Optional[TrainConfig] = None,
        checkpoint_path: Optional[Union[str, Path]] = None,
        provenance: Optional[Dict[str, Any]] = None,
    ):
        self._model = model
        self._cfg = cfg or TrainConfig()
        self._checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        self._provenance = dict(provenance or {})
        self._opt_state = AdamState.for_params(model.params, lr=self._cfg.lr)
        self._trace = LossTrace()
        self._epoch = 0
        self._logger = logging.getLogger(__name__)

    @property
    def model(self) -> HeatmapNet:
        return self._model

    @property
    def trace(self) -> LossTrace:
        return self._trace

    @property
    def epoch(self) -> int:
        return self._epoch

    def resume(self, checkpoint: Checkpoint) -> None:
        """Restore parameters, optimizer moments, trace and epoch from a checkpoint."""
        checkpoint.load_into(self._model)
        if checkpoint.adam is not None:
            adam = checkpoint.adam
            self._opt_state = AdamState(
                step=adam.step,
                m={k: v.copy() for k, v in adam.m.items()},
                v={k: v.copy() for k, v in adam.v.items()},
                lr=adam.lr,
                beta1=adam.beta1,
                beta2=adam.beta2,
                eps=adam.eps,
            )
        self._trace = LossTrace.from_dict(checkpoint.trace)
        self._epoch = checkpoint.epoch
        if checkpoint.rng_seed != self._cfg.seed:
            self._logger.warning(
                f"Resuming a run seeded {checkpoint.rng_seed} with seed {self._cfg.seed}"
            )
        self._logger.info(f"Resumed {self._model.kind} at epoch {self._epoch}")

    def checkpoint(self) -> Checkpoint:
        """Snapshot of the current training state."""
        state = self._opt_state
        adam = AdamState(
            step=state.step,
            m={k: v.copy() for k, v in state.m.items()},
            v={k: v.copy() for k, v in state.v.items()},
            lr=state.lr,
            beta1=state.beta1,
            beta2=state.beta2,
            eps=state.eps,
        )
        return Checkpoint.from_model(
            self._model,
            adam=adam,
            train_config=self._cfg.to_dict(),
            epoch=self._epoch,
            trace=self._trace.to_dict(),
            rng_seed=self._cfg.seed,
            provenance=dict(self._provenance),
        )

    def _write_checkpoint(self) -> None:
        if self._checkpoint_path is None:
            return
        write_checkpoint(self.checkpoint(), self._checkpoint_path)
        self._logger.info(f"✅ Checkpoint at epoch {self._epoch} -> {self._checkpoint_path}")

    def _run_epoch(
        self, dataset: Dataset, train_idx: np.ndarray, epoch: int
    ) -> Tuple[float, float]:
        cfg = self._cfg
        rng = np.random.default_rng([cfg.seed, epoch])
        order = train_idx[rng.permutation(len(train_idx))]
        latent = self._model.cfg.latent_dim
        mae_sum = kl_sum = 0.0
        for step, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch = order[start : start + cfg.batch_size].tolist()
            noise = rng.standard_normal((len(batch), latent)).astype(np.float32)
            try:
                losses, _ = train_step(
                    self._model,
                    dataset.inputs(batch),
                    dataset.targets(batch),
                    cfg,
                    self._opt_state,
                    noise,
                )
            except NonFiniteLoss as e:
                self._logger.error(f"❌ Training diverged at epoch {epoch + 1}, step {step}: {e}")
                raise
            mae_sum += losses.mae * len(batch)
            kl_sum += losses.kl * len(batch)
            self._trace.steps.append(
                {"epoch": epoch + 1, "step": step, "mae": losses.mae, "kl": losses.kl}
            )
        return mae_sum / len(order), kl_sum / len(order)

    def fit(
        self, dataset: Dataset, resume: Optional[Checkpoint] = None, require_val: bool = True
    ) -> LossTrace:
        """
        Train until cfg.epochs epochs are complete.

        Args:
            dataset (Dataset): Needs train samples, and val samples unless require_val is False
            resume (Checkpoint, optional): Continue from this state
            require_val (bool): Without val samples, val_mae is recorded as NaN

        Returns:
            LossTrace: Losses for every completed epoch

        Raises:
            EmptySplit: No train (or val) samples
            NonFiniteLoss: Training diverged
        """
        if resume is not None:
            self.resume(resume)
        cfg = self._cfg
        train_idx = np.asarray(dataset.require("train"))
        val_idx = dataset.require("val") if require_val else dataset.indices("val")

        self._logger.info(
            f"Training {self._model.kind} on {len(train_idx)} samples "
            f"({len(val_idx)} val), epochs {self._epoch + 1}..{cfg.epochs}"
        )
        while self._epoch < cfg.epochs:
            train_mae, train_kl = self._run_epoch(dataset, train_idx, self._epoch)
            val_mae = evaluate_mae(self._model, dataset, val_idx, cfg.batch_size)
            self._epoch += 1
            self._trace.record_epoch(self._epoch, train_mae, train_kl, val_mae)
            self._logger.info(
                f"Epoch {self._epoch}/{cfg.epochs}: train_mae={train_mae:.5f} "
                f"train_kl={train_kl:.4f} val_mae={val_mae:.5f}"
            )
            if cfg.checkpoint_every and self._epoch % cfg.checkpoint_every == 0:
                self._write_checkpoint()

        if not cfg.checkpoint_every or self._epoch % cfg.checkpoint_every:
            self._write_checkpoint()
        self._logger.info(f"✅ Finished training {self._model.kind} after {self._epoch} epochs")
        return self._trace


def fit(
    model: HeatmapNet,
    dataset: Dataset,
    cfg: Optional[TrainConfig] = None,
    resume: Optional[Checkpoint] = None,
    checkpoint_path: Optional[Union[str, Path]] = None,
) -> Tuple[Params, LossTrace]:
    """Train a model in place; returns its parameters and the loss trace."""
    trainer = Trainer(model, cfg, checkpoint_path=checkpoint_path)
    trace = trainer.fit(dataset, resume=resume)
    return model.params, trace
