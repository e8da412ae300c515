"""Oracle subpackage."""

from warehouse_sinr.oracle.propagation import (
    MIN_DISTANCE_M,
    SINR_CLAMP_DB,
    SPEED_OF_LIGHT,
    PropagationParams,
    SinrHeatmap,
    crossing_loss_db,
    fspl_db,
    noise_floor_dbm,
    received_power_dbm,
    sinr_heatmap,
)
from warehouse_sinr.oracle.raytrace import crossing_counts, ray_crossings, traverse_cells

__all__ = [
    "MIN_DISTANCE_M",
    "SINR_CLAMP_DB",
    "SPEED_OF_LIGHT",
    "PropagationParams",
    "SinrHeatmap",
    "crossing_counts",
    "crossing_loss_db",
    "fspl_db",
    "noise_floor_dbm",
    "ray_crossings",
    "received_power_dbm",
    "sinr_heatmap",
    "traverse_cells",
]
