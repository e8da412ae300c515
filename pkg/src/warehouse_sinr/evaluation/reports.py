"""
Scenario reports and their on-disk layout.

A report directory is named ``<scenario>-seed<seed>-<config hash>`` and holds
report.json, metrics.csv and one PNG per stored error map under maps/.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from warehouse_sinr.exceptions import ConfigError
from warehouse_sinr.storage.png_export import export_heatmap_png

logger = logging.getLogger(__name__)

SCENARIOS = ("validation", "denoising", "extrapolation", "fewshot")


@dataclass
class ModelResult:
    """
    Aggregate errors of one model (or baseline) in one setting.

    Attributes:
        mae_db (float): Mean of the per-pixel error maps, dB
        max_pixel_error_db (float): Peak per-pixel error, dB
        mse_db (float, optional): Mean squared error, dB^2 (denoising only)
        n_samples (int): Heatmaps evaluated
        error_maps (Dict[str, np.ndarray]): Stored maps by label
        error_map_paths (List[str]): Filled in when the report is written
    """

    mae_db: float
    max_pixel_error_db: float
    mse_db: Optional[float] = None
    n_samples: int = 0
    error_maps: Dict[str, np.ndarray] = field(default_factory=dict)
    error_map_paths: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "mae_db": self.mae_db,
            "max_pixel_error_db": self.max_pixel_error_db,
            "n_samples": self.n_samples,
            "error_map_paths": list(self.error_map_paths),
        }
        if self.mse_db is not None:
            data["mse_db"] = self.mse_db
        return data


@dataclass
class EvalReport:
    """
    Result of one scenario run.

    Attributes:
        scenario (str): validation, denoising, extrapolation or fewshot
        per_model (Dict[str, ModelResult]): Keyed by model label ("vae", "ae@k=16", ...)
        config (Dict): Effective config snapshot
        seed (int): Scenario seed
        config_hash (str): Hash of the effective config
        error_range_db (float): Upper end of the PNG color range for error maps
        extra (Dict): Scenario-specific fields (timings, counts, flags)
    """

    scenario: str
    per_model: Dict[str, ModelResult] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    config_hash: str = ""
    error_range_db: float = 70.0
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"Unknown scenario '{self.scenario}', expected one of {SCENARIOS}")

    @property
    def dirname(self) -> str:
        return f"{self.scenario}-seed{self.seed}-{self.config_hash or 'nohash'}"

    def to_frame(self) -> pd.DataFrame:
        rows = [{"model": label, **result.to_dict()} for label, result in self.per_model.items()]
        frame = pd.DataFrame(rows)
        if "error_map_paths" in frame:
            frame = frame.drop(columns=["error_map_paths"])
        return frame

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "config": self.config,
            "per_model": {label: r.to_dict() for label, r in self.per_model.items()},
            "extra": self.extra,
        }


def _safe(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in label)


def write_report(report: EvalReport, root: Union[str, Path]) -> Path:
    """
    Write JSON, CSV and PNG error maps under root/<report.dirname>.

    Returns:
        Path: The report directory
    """
    out = Path(root) / report.dirname
    maps_dir = out / "maps"
    out.mkdir(parents=True, exist_ok=True)
    hi = report.error_range_db if report.error_range_db > 0 else 1.0

    for label, result in report.per_model.items():
        result.error_map_paths = []
        for name, emap in sorted(result.error_maps.items()):
            target = maps_dir / f"{_safe(label)}_{_safe(name)}.png"
            export_heatmap_png(emap, (0.0, hi), target)
            result.error_map_paths.append(str(target.relative_to(out)))

    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    report.to_frame().to_csv(out / "metrics.csv", index=False, float_format="%.9g")
    logger.info(f"✅ Wrote {report.scenario} report for {len(report.per_model)} models to {out}")
    return out
