"""
Per-pixel error maps and aggregate error metrics, in dB.
"""

from typing import Tuple

import numpy as np
from scipy import ndimage

from warehouse_sinr.exceptions import ShapeMismatch
from warehouse_sinr.tensors.builders import denormalize_sinr


def error_heatmap(
    target: np.ndarray, pred: np.ndarray, norm: Tuple[float, float]
) -> np.ndarray:
    """
    Absolute per-pixel error after denormalization.

    Args:
        target (np.ndarray): (H, W) normalized ground truth
        pred (np.ndarray): (H, W) normalized prediction
        norm (Tuple[float, float]): (lo_db, hi_db) normalization range

    Returns:
        np.ndarray: (H, W) error in dB
    """
    target, pred = np.asarray(target), np.asarray(pred)
    if target.shape != pred.shape:
        raise ShapeMismatch(f"error_heatmap: shapes {target.shape} and {pred.shape} differ")
    return np.abs(denormalize_sinr(target, *norm) - denormalize_sinr(pred, *norm))


def mae_db(error_maps: np.ndarray) -> float:
    return float(np.mean(error_maps, dtype=np.float64))


def max_error_db(error_maps: np.ndarray) -> float:
    return float(np.max(error_maps))


def mse_db(error_maps: np.ndarray) -> float:
    """Mean squared error in dB^2 from absolute error maps."""
    e = np.asarray(error_maps, dtype=np.float64)
    return float(np.mean(e * e))


def los_boundary_mask(los: np.ndarray, radius: int = 2) -> np.ndarray:
    """
    Cells within `radius` cells of a LOS/NLOS transition.

    Args:
        los (np.ndarray): (H, W) LOS mask, nonzero = line of sight
        radius (int): Dilation radius in cells (8-connected)

    Returns:
        np.ndarray: (H, W) bool
    """
    los = np.asarray(los) > 0.5
    cross = ndimage.generate_binary_structure(2, 1)
    # cells with a 4-neighbour on the other side of the transition
    edge = (ndimage.binary_dilation(los, cross) & ~los) | (
        ndimage.binary_dilation(~los, cross) & los
    )
    if radius <= 0 or not edge.any():
        return edge
    square = ndimage.generate_binary_structure(2, 2)
    return ndimage.binary_dilation(edge, square, iterations=radius)


def boundary_concentration(
    error_map: np.ndarray, los: np.ndarray, radius: int = 2
) -> Tuple[float, float]:
    """
    Mean error near LOS/NLOS transitions and away from them.

    Returns:
        Tuple[float, float]: (near, far); NaN when a region is empty
    """
    error_map = np.asarray(error_map, dtype=np.float64)
    near = los_boundary_mask(los, radius)
    if near.shape != error_map.shape:
        raise ShapeMismatch(f"LOS mask {near.shape} does not match error map {error_map.shape}")
    near_mean = float(error_map[near].mean()) if near.any() else float("nan")
    far_mean = float(error_map[~near].mean()) if (~near).any() else float("nan")
    return near_mean, far_mean
