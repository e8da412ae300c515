"""Losses and the training loop."""

from warehouse_sinr.training.losses import kl_divergence, kl_grad, mae_grad, mae_loss
from warehouse_sinr.training.trainer import (
    TRACE_COLUMNS,
    LossComponents,
    LossTrace,
    TrainConfig,
    Trainer,
    evaluate_mae,
    fit,
    objective,
    train_step,
)

__all__ = [
    "TRACE_COLUMNS",
    "LossComponents",
    "LossTrace",
    "TrainConfig",
    "Trainer",
    "evaluate_mae",
    "fit",
    "kl_divergence",
    "kl_grad",
    "mae_grad",
    "mae_loss",
    "objective",
    "train_step",
]
