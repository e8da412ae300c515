"""Tensors subpackage."""

from warehouse_sinr.tensors.builders import (
    DEFAULT_AP_SCALE,
    ap_location_tensor,
    aux_channels,
    denormalize_sinr,
    distance_tensor,
    los_channel,
    nearest_shelf_distance,
    normalize_sinr,
    permittivity_tensor,
    quadrant_of,
    resize,
)
from warehouse_sinr.tensors.dataset import (
    QUADRANTS,
    Dataset,
    SampleMeta,
    SampleTensors,
    TensorConfig,
    assign_split,
    build_dataset,
    build_sample,
    filter_quadrants,
    placement_inputs,
    quadrant_holdout,
    scale_channels,
)

__all__ = [
    "DEFAULT_AP_SCALE",
    "QUADRANTS",
    "Dataset",
    "SampleMeta",
    "SampleTensors",
    "TensorConfig",
    "ap_location_tensor",
    "assign_split",
    "aux_channels",
    "build_dataset",
    "build_sample",
    "denormalize_sinr",
    "distance_tensor",
    "filter_quadrants",
    "los_channel",
    "nearest_shelf_distance",
    "normalize_sinr",
    "permittivity_tensor",
    "placement_inputs",
    "quadrant_holdout",
    "quadrant_of",
    "resize",
    "scale_channels",
]
