"""
Physics-informed input channels and target scaling.

All builders evaluate at cell centers of a (rows, cols) grid; cell (i, j)
is centered at ((j + 0.5) * cw, (i + 0.5) * ch).
"""

from typing import Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from warehouse_sinr.exceptions import ConfigError, DegenerateRange, InvalidResolution
from warehouse_sinr.oracle.propagation import SINR_CLAMP_DB, SinrHeatmap
from warehouse_sinr.oracle.raytrace import crossing_counts
from warehouse_sinr.scene.geometry import MIN_CELLS, GridSpec, PermittivityGrid
from warehouse_sinr.scene.layout import ApPlacement, WarehouseScene, rasterize_materials

DEFAULT_AP_SCALE = 12.0

Resolution = Union[float, Tuple[float, float]]


def _cell_size(res_m: Resolution) -> Tuple[float, float]:
    """(cell_h, cell_w) from a scalar or (res_y, res_x) resolution."""
    if isinstance(res_m, tuple):
        return float(res_m[0]), float(res_m[1])
    return float(res_m), float(res_m)


def _centers(rows: int, cols: int, res_m: Resolution) -> Tuple[np.ndarray, np.ndarray]:
    cell_h, cell_w = _cell_size(res_m)
    xs = (np.arange(cols) + 0.5) * cell_w
    ys = (np.arange(rows) + 0.5) * cell_h
    return np.meshgrid(xs, ys)


def ap_cell(ap: ApPlacement, rows: int, cols: int, res_m: Resolution) -> Tuple[int, int]:
    """(row, col) of the cell containing the AP's planar position."""
    cell_h, cell_w = _cell_size(res_m)
    col = min(max(int(np.floor(ap.x_ap / cell_w)), 0), cols - 1)
    row = min(max(int(np.floor(ap.y_ap / cell_h)), 0), rows - 1)
    return row, col


def distance_tensor(ap: ApPlacement, rows: int, cols: int, res_m: Resolution) -> np.ndarray:
    """
    Planar Euclidean distance from every cell center to the AP, meters.

    Args:
        ap (ApPlacement): AP inside the grid extent
        rows (int): Grid height in cells
        cols (int): Grid width in cells
        res_m (float or Tuple[float, float]): Cell size, or (res_y, res_x)

    Returns:
        np.ndarray: (rows, cols) distances
    """
    xx, yy = _centers(rows, cols, res_m)
    return np.hypot(xx - ap.x_ap, yy - ap.y_ap)


def permittivity_tensor(grid: PermittivityGrid) -> np.ndarray:
    """
    Relative permittivity min-max scaled over the material table, air -> 0.

    Args:
        grid (PermittivityGrid): Rasterized scene

    Returns:
        np.ndarray: (rows, cols) values in [0, 1]
    """
    eps = grid.permittivity
    eps_max = max([1.0] + [m.rel_permittivity for m in grid.materials])
    if eps_max == 1.0:
        return np.zeros_like(eps)
    return (eps - 1.0) / (eps_max - 1.0)


def ap_location_tensor(
    ap: ApPlacement, rows: int, cols: int, res_m: Resolution, scale: float = DEFAULT_AP_SCALE
) -> np.ndarray:
    """
    Scaled discrete delta at the AP's cell.

    Args:
        ap (ApPlacement): AP inside the grid extent
        rows, cols (int): Grid size
        res_m (float or Tuple[float, float]): Cell size
        scale (float): Value written at the AP cell (default 12)

    Returns:
        np.ndarray: (rows, cols), zero except the AP cell
    """
    tensor = np.zeros((rows, cols), dtype=np.float64)
    row, col = ap_cell(ap, rows, cols, res_m)
    tensor[row, col] = scale
    return tensor


def los_channel(grid: PermittivityGrid, ap: ApPlacement) -> np.ndarray:
    """1.0 where the ray from the cell center to the AP crosses no obstacle run, else 0.0."""
    xx, yy = grid.geometry.cell_center_mesh()
    targets = np.stack([xx.ravel(), yy.ravel()], axis=1)
    counts = crossing_counts(grid, ap.position, targets, skip_source_run=True)
    return (counts.sum(axis=1) == 0).astype(np.float64).reshape(grid.shape)


def nearest_shelf_distance(scene: WarehouseScene, geometry: GridSpec) -> np.ndarray:
    """
    Planar distance from each cell center to the closest shelf footprint, meters.

    Zero inside shelves; the floor diagonal on an empty floor.
    """
    xx, yy = geometry.cell_center_mesh()
    best = np.full(geometry.shape, float(np.hypot(scene.width_m, scene.depth_m)))
    for shelf in scene.shelves:
        dx = np.maximum(np.maximum(shelf.x - xx, 0.0), xx - shelf.x1)
        dy = np.maximum(np.maximum(shelf.y - yy, 0.0), yy - shelf.y1)
        best = np.minimum(best, np.hypot(dx, dy))
    return best


def aux_channels(
    scene: WarehouseScene,
    ap: ApPlacement,
    rows: int,
    cols: int,
    include_shelf_mask: bool = False,
    grid: Optional[PermittivityGrid] = None,
) -> np.ndarray:
    """
    Auxiliary channels, channel-first.

    Channel 0 is the LOS mask, channel 1 the nearest-shelf distance in meters,
    and with include_shelf_mask a third channel marks shelf cells.

    Args:
        scene (WarehouseScene): Scene
        ap (ApPlacement): AP
        rows, cols (int): Grid size (cells span the whole floor)
        include_shelf_mask (bool): Append the shelf occupancy channel
        grid (PermittivityGrid, optional): Pre-rasterized scene on the same grid

    Returns:
        np.ndarray: (2, rows, cols) or (3, rows, cols)
    """
    geometry = GridSpec(scene.width_m, scene.depth_m, rows, cols)
    if grid is None or grid.geometry != geometry:
        grid = rasterize_materials(scene, geometry=geometry)
    channels = [los_channel(grid, ap), nearest_shelf_distance(scene, geometry)]
    if include_shelf_mask:
        channels.append(grid.occupancy.astype(np.float64))
    return np.stack(channels)


def normalize_sinr(
    h: Union[SinrHeatmap, np.ndarray],
    lo_db: float = SINR_CLAMP_DB[0],
    hi_db: float = SINR_CLAMP_DB[1],
) -> np.ndarray:
    """
    Affine map of SINR (dB) onto [0, 1], clamped.

    Raises:
        DegenerateRange: lo_db >= hi_db
    """
    if not lo_db < hi_db:
        raise DegenerateRange(f"Normalization range must satisfy lo < hi, got ({lo_db}, {hi_db})")
    values = h.values if isinstance(h, SinrHeatmap) else np.asarray(h, dtype=np.float64)
    return np.clip((values - lo_db) / (hi_db - lo_db), 0.0, 1.0)


def denormalize_sinr(
    x: np.ndarray, lo_db: float = SINR_CLAMP_DB[0], hi_db: float = SINR_CLAMP_DB[1]
) -> np.ndarray:
    """Inverse of normalize_sinr inside the range, dB."""
    if not lo_db < hi_db:
        raise DegenerateRange(f"Normalization range must satisfy lo < hi, got ({lo_db}, {hi_db})")
    return lo_db + np.asarray(x, dtype=np.float64) * (hi_db - lo_db)


def resize(t: np.ndarray, out: int, mode: str = "bilinear") -> np.ndarray:
    """
    Resample a 2D tensor to out x out.

    Args:
        t (np.ndarray): (H, W) tensor
        out (int): Output cells per side, >= 8
        mode (str): "bilinear" (corner-aligned) or "nearest" (pixel-center nearest,
            exact block replication for integer upsampling)

    Returns:
        np.ndarray: (out, out) tensor
    """
    if out < MIN_CELLS:
        raise InvalidResolution(f"Resize target must be >= {MIN_CELLS}, got {out}")
    t = np.asarray(t, dtype=np.float64)
    h, w = t.shape
    if mode == "nearest":
        rows = np.minimum(((np.arange(out) + 0.5) * h / out).astype(np.intp), h - 1)
        cols = np.minimum(((np.arange(out) + 0.5) * w / out).astype(np.intp), w - 1)
        return t[np.ix_(rows, cols)]
    if mode != "bilinear":
        raise ConfigError(f"Unknown resize mode '{mode}'")
    # corner-aligned: output sample k reads input coordinate k * (n - 1) / (out - 1)
    rr, cc = np.meshgrid(np.linspace(0.0, h - 1, out), np.linspace(0.0, w - 1, out), indexing="ij")
    return ndimage.map_coordinates(t, [rr, cc], order=1, mode="nearest")


def quadrant_of(x: float, y: float, width_m: float, depth_m: float) -> str:
    """
    Floor quadrant around the center (W/2, D/2).

    I = (x >= cx, y >= cy), II = (x < cx, y >= cy), III = (x < cx, y < cy), IV = (x >= cx, y < cy)
    """
    cx, cy = width_m / 2.0, depth_m / 2.0
    if y >= cy:
        return "I" if x >= cx else "II"
    return "IV" if x >= cx else "III"
