"""
Heatmap PNG export with a fixed perceptual colormap and a legend strip.
"""

import logging
from pathlib import Path
from typing import Tuple, Union

import matplotlib
import numpy as np
from matplotlib import image as mpimg

from warehouse_sinr.exceptions import DegenerateRange, ShapeMismatch

logger = logging.getLogger(__name__)

COLORMAP = "viridis"
LEGEND_GAP = 2
LEGEND_WIDTH = 4


def colorize(values: np.ndarray, value_range: Tuple[float, float]) -> np.ndarray:
    """
    Map values to 8-bit RGBA through the fixed colormap.

    Returns:
        np.ndarray: (..., 4) uint8
    """
    lo, hi = value_range
    if not lo < hi:
        raise DegenerateRange(f"Color range must satisfy lo < hi, got ({lo}, {hi})")
    scaled = np.clip((np.asarray(values, dtype=np.float64) - lo) / (hi - lo), 0.0, 1.0)
    return matplotlib.colormaps[COLORMAP](scaled, bytes=True)


def heatmap_image(values: np.ndarray, value_range: Tuple[float, float]) -> np.ndarray:
    """
    RGBA image of a heatmap with the legend strip on the right.

    Row 0 of the grid (y = 0) is drawn at the bottom. The legend is a white
    gap followed by a vertical ramp from lo (bottom) to hi (top).

    Returns:
        np.ndarray: (H, W + LEGEND_GAP + LEGEND_WIDTH, 4) uint8
    """
    values = np.asarray(values)
    if values.ndim != 2:
        raise ShapeMismatch(f"Heatmap must be 2D, got {values.shape}")
    h, w = values.shape
    lo, hi = value_range
    body = colorize(np.flipud(values), value_range)
    ramp = np.linspace(hi, lo, h)[:, None].repeat(LEGEND_WIDTH, axis=1)
    legend = colorize(ramp, value_range)
    gap = np.full((h, LEGEND_GAP, 4), 255, dtype=np.uint8)
    return np.concatenate([body, gap, legend], axis=1)


def export_heatmap_png(
    values: np.ndarray, value_range: Tuple[float, float], path: Union[str, Path]
) -> Path:
    """
    Write an 8-bit PNG of a heatmap with its legend strip.

    Args:
        values (np.ndarray): (H, W) values, clamped to value_range
        value_range (Tuple[float, float]): (lo, hi), lo < hi
        path (str or Path): Output file; parent directories are created

    Returns:
        Path: The written file

    Raises:
        DegenerateRange: lo >= hi
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rgba = heatmap_image(values, value_range)
    # no Software text chunk, so identical inputs give identical bytes
    mpimg.imsave(path, rgba, format="png", metadata={"Software": None})
    logger.debug(f"Wrote {rgba.shape[0]}x{rgba.shape[1]} heatmap to {path}")
    return path
