"""
Exact grid traversal for LOS/NLOS decisions.

A segment visits every cell it passes through with positive length. When it
passes exactly through a grid vertex it steps diagonally, so cells touched
only at a corner are not visited. Obstacles are reported as runs: consecutive
cells of one material count as a single crossing.
"""

import math
from typing import List, Sequence, Tuple

import numpy as np

from warehouse_sinr.scene.geometry import PermittivityGrid
from warehouse_sinr.scene.materials import Material

# parametric lengths below this are treated as zero (vertex passages, float noise)
_EPS = 1e-9
_CHUNK = 4096

Point = Tuple[float, float]


def traverse_cells(grid: PermittivityGrid, a: Point, b: Point) -> List[Tuple[int, int]]:
    """
    Cells (row, col) crossed by the segment a -> b, in order (DDA).

    Args:
        grid (PermittivityGrid): Grid to walk
        a (Point): Start (x, y) in meters
        b (Point): End (x, y) in meters

    Returns:
        List[Tuple[int, int]]: Visited cells; empty for a zero-length segment
    """
    geometry = grid.geometry
    u0, v0 = (float(c) for c in geometry.to_cell_units(a[0], a[1]))
    u1, v1 = (float(c) for c in geometry.to_cell_units(b[0], b[1]))
    du, dv = u1 - u0, v1 - v0
    if du == 0.0 and dv == 0.0:
        return []

    # nudge along the ray so a start on a cell boundary picks the cell it enters
    col = min(max(int(math.floor(u0 + du * _EPS)), 0), geometry.cols - 1)
    row = min(max(int(math.floor(v0 + dv * _EPS)), 0), geometry.rows - 1)

    step_u = (du > 0) - (du < 0)
    step_v = (dv > 0) - (dv < 0)
    if step_u:
        t_max_u = ((col + (step_u > 0)) - u0) / du
        t_delta_u = 1.0 / abs(du)
    else:
        t_max_u = t_delta_u = math.inf
    if step_v:
        t_max_v = ((row + (step_v > 0)) - v0) / dv
        t_delta_v = 1.0 / abs(dv)
    else:
        t_max_v = t_delta_v = math.inf

    cells: List[Tuple[int, int]] = []
    t = 0.0
    while True:
        t_next = min(t_max_u, t_max_v, 1.0)
        if t_next - t > _EPS:
            cells.append((row, col))
        if t_next >= 1.0:
            break
        if abs(t_max_u - t_max_v) <= _EPS:
            col += step_u
            row += step_v
            t_max_u += t_delta_u
            t_max_v += t_delta_v
        elif t_max_u < t_max_v:
            col += step_u
            t_max_u += t_delta_u
        else:
            row += step_v
            t_max_v += t_delta_v
        t = t_next
        if not (0 <= row < geometry.rows and 0 <= col < geometry.cols):
            break
    return cells


def _runs(codes: Sequence[int], skip_source_run: bool) -> List[int]:
    """Material code of each obstacle run along a code sequence."""
    codes = list(codes)
    if skip_source_run and codes and codes[0] != 0:
        first = codes[0]
        while codes and codes[0] == first:
            codes.pop(0)
    runs: List[int] = []
    previous = 0
    for code in codes:
        if code != 0 and code != previous:
            runs.append(code)
        previous = code
    return runs


def ray_crossings(
    grid: PermittivityGrid, a: Point, b: Point, skip_source_run: bool = False
) -> List[Tuple[Material, int]]:
    """
    Obstacle runs crossed by the segment a -> b.

    Args:
        grid (PermittivityGrid): Rasterized materials
        a (Point): Start (x, y), meters
        b (Point): End (x, y), meters
        skip_source_run (bool): Ignore the run containing a's own cell (elevated AP)

    Returns:
        List[Tuple[Material, int]]: (material, run count) in order of first encounter;
            empty means line of sight
    """
    codes = [int(grid.index[r, c]) for r, c in traverse_cells(grid, a, b)]
    counts: dict = {}
    for code in _runs(codes, skip_source_run):
        counts[code] = counts.get(code, 0) + 1
    return [(grid.material(code), n) for code, n in counts.items()]


def crossing_counts(
    grid: PermittivityGrid,
    source: Point,
    targets: np.ndarray,
    skip_source_run: bool = False,
) -> np.ndarray:
    """
    Vectorized run counts for many segments sharing one source.

    The crossings of every segment with the interior grid lines are sorted in
    parameter order; each positive-length interval between consecutive
    crossings is one visited cell, sampled at its midpoint.

    Args:
        grid (PermittivityGrid): Rasterized materials
        source (Point): Common start (x, y), meters
        targets (np.ndarray): (n, 2) end points, meters
        skip_source_run (bool): Ignore the run containing the source cell

    Returns:
        np.ndarray: (n, n_materials + 1) int run counts; column k counts material code k
            (column 0, air, is always zero)
    """
    targets = np.asarray(targets, dtype=np.float64).reshape(-1, 2)
    counts = np.zeros((len(targets), len(grid.materials) + 1), dtype=np.int32)
    for start in range(0, len(targets), _CHUNK):
        chunk = targets[start : start + _CHUNK]
        counts[start : start + len(chunk)] = _chunk_counts(grid, source, chunk, skip_source_run)
    return counts


def _chunk_counts(
    grid: PermittivityGrid, source: Point, targets: np.ndarray, skip_source_run: bool
) -> np.ndarray:
    geometry = grid.geometry
    u0, v0 = (float(c) for c in geometry.to_cell_units(source[0], source[1]))
    tu, tv = geometry.to_cell_units(targets[:, 0], targets[:, 1])
    du = (tu - u0)[:, None]
    dv = (tv - v0)[:, None]
    m = len(targets)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_u = (np.arange(1, geometry.cols, dtype=np.float64)[None, :] - u0) / du
        t_v = (np.arange(1, geometry.rows, dtype=np.float64)[None, :] - v0) / dv
    t_u[~((t_u > 0.0) & (t_u < 1.0))] = np.inf
    t_v[~((t_v > 0.0) & (t_v < 1.0))] = np.inf

    ts = np.concatenate([np.zeros((m, 1)), t_u, t_v, np.ones((m, 1))], axis=1)
    ts.sort(axis=1)
    t0, t1 = ts[:, :-1], ts[:, 1:]
    finite = np.isfinite(t1)
    gaps = np.subtract(t1, t0, out=np.zeros_like(t1), where=finite)
    valid = finite & (gaps > _EPS)

    mid = np.where(valid, 0.5 * (t0 + t1), 0.0)
    cols = np.clip(np.floor(u0 + mid * du), 0, geometry.cols - 1).astype(np.intp)
    rows = np.clip(np.floor(v0 + mid * dv), 0, geometry.rows - 1).astype(np.intp)
    codes = grid.index[rows, cols].astype(np.int32)

    # zero-length intervals inherit the previous cell so they never split a run
    positions = np.where(valid, np.arange(codes.shape[1])[None, :], 0)
    np.maximum.accumulate(positions, axis=1, out=positions)
    codes = np.take_along_axis(codes, positions, axis=1)

    if skip_source_run:
        first = codes[:, :1]
        in_first_run = np.logical_and.accumulate(codes == first, axis=1) & (first != 0)
        codes = np.where(in_first_run, 0, codes)

    starts = np.empty_like(codes, dtype=bool)
    starts[:, 0] = codes[:, 0] != 0
    starts[:, 1:] = (codes[:, 1:] != codes[:, :-1]) & (codes[:, 1:] != 0)

    counts = np.zeros((m, len(grid.materials) + 1), dtype=np.int32)
    for code in range(1, len(grid.materials) + 1):
        counts[:, code] = np.sum(starts & (codes == code), axis=1)

    zero_length = (du[:, 0] == 0.0) & (dv[:, 0] == 0.0)
    counts[zero_length] = 0
    return counts
