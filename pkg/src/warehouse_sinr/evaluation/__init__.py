"""Evaluation scenarios, error metrics and reports."""

from warehouse_sinr.evaluation.metrics import (
    boundary_concentration,
    error_heatmap,
    los_boundary_mask,
    mae_db,
    max_error_db,
    mse_db,
)
from warehouse_sinr.evaluation.reports import SCENARIOS, EvalReport, ModelResult, write_report
from warehouse_sinr.evaluation.scenarios import (
    EvalConfig,
    model_config_for,
    predict_batched,
    scenario_denoising,
    scenario_extrapolation,
    scenario_fewshot,
    scenario_validation,
)

__all__ = [
    "SCENARIOS",
    "EvalConfig",
    "EvalReport",
    "ModelResult",
    "boundary_concentration",
    "error_heatmap",
    "los_boundary_mask",
    "mae_db",
    "max_error_db",
    "model_config_for",
    "mse_db",
    "predict_batched",
    "scenario_denoising",
    "scenario_extrapolation",
    "scenario_fewshot",
    "scenario_validation",
    "write_report",
]
