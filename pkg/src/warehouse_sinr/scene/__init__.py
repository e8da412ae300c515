"""Scene subpackage."""

from warehouse_sinr.scene.geometry import GridSpec, PermittivityGrid
from warehouse_sinr.scene.layout import (
    ApDefaults,
    ApPlacement,
    LayoutSpec,
    Shelf,
    WarehouseScene,
    ap_sweep_positions,
    generate_layout,
    rasterize_materials,
)
from warehouse_sinr.scene.materials import AIR, DEFAULT_MATERIALS, Material

__all__ = [
    "AIR",
    "DEFAULT_MATERIALS",
    "ApDefaults",
    "ApPlacement",
    "GridSpec",
    "LayoutSpec",
    "Material",
    "PermittivityGrid",
    "Shelf",
    "WarehouseScene",
    "ap_sweep_positions",
    "generate_layout",
    "rasterize_materials",
]
