"""
Grid geometry shared by rasterization, ray tracing and the tensor builders.

Cell (i, j) covers x in [j*cw, (j+1)*cw) and y in [i*ch, (i+1)*ch):
rows follow y, columns follow x.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from warehouse_sinr.exceptions import InvalidResolution
from warehouse_sinr.scene.materials import AIR, Material

MIN_CELLS = 8


@dataclass(frozen=True)
class GridSpec:
    """
    Regular grid spanning a rectangular floor.

    Attributes:
        width_m (float): Floor extent along x
        depth_m (float): Floor extent along y
        rows (int): Number of cells along y
        cols (int): Number of cells along x
    """

    width_m: float
    depth_m: float
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < MIN_CELLS or self.cols < MIN_CELLS:
            raise InvalidResolution(
                f"Grid must be at least {MIN_CELLS}x{MIN_CELLS} cells, got {self.rows}x{self.cols}"
            )

    @classmethod
    def square(cls, width_m: float, depth_m: float, out_res: int) -> "GridSpec":
        """out_res x out_res cells over the floor (cells are rectangular on non-square floors)."""
        return cls(width_m, depth_m, int(out_res), int(out_res))

    @classmethod
    def native(cls, width_m: float, depth_m: float, res_m: float) -> "GridSpec":
        """Cells of (approximately) res_m meters; the count is rounded so cells tile the floor."""
        if res_m <= 0:
            raise InvalidResolution(f"Grid resolution must be positive, got {res_m}")
        return cls(width_m, depth_m, int(round(depth_m / res_m)), int(round(width_m / res_m)))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def cell_w(self) -> float:
        return self.width_m / self.cols

    @property
    def cell_h(self) -> float:
        return self.depth_m / self.rows

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns:
            Tuple[np.ndarray, np.ndarray]: x centers (cols,), y centers (rows,)
        """
        xs = (np.arange(self.cols) + 0.5) * self.cell_w
        ys = (np.arange(self.rows) + 0.5) * self.cell_h
        return xs, ys

    def cell_center_mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """X and Y coordinates of every cell center, each (rows, cols)."""
        xs, ys = self.cell_centers()
        return np.meshgrid(xs, ys)

    def cell_of(self, x: float, y: float) -> Tuple[int, int]:
        """(row, col) of the cell containing (x, y); far-wall points map to the last cell."""
        col = min(max(int(np.floor(x / self.cell_w)), 0), self.cols - 1)
        row = min(max(int(np.floor(y / self.cell_h)), 0), self.rows - 1)
        return row, col

    def to_cell_units(self, x, y):
        """Continuous (u, v) coordinates in cell units: u along columns, v along rows."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return x / self.cell_w, y / self.cell_h

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width_m and 0.0 <= y <= self.depth_m


@dataclass(frozen=True, eq=False)
class PermittivityGrid:
    """
    Rasterized materials.

    Attributes:
        index (np.ndarray): (rows, cols) material codes, 0 = air, k = materials[k - 1]
        materials (Tuple[Material, ...]): The scene's material table
        geometry (GridSpec): Grid the raster lives on
    """

    index: np.ndarray
    materials: Tuple[Material, ...]
    geometry: GridSpec

    @property
    def shape(self) -> Tuple[int, int]:
        return self.index.shape

    @property
    def permittivity(self) -> np.ndarray:
        """(rows, cols) relative permittivity, air = 1.0."""
        lookup = np.array(
            [AIR.rel_permittivity] + [m.rel_permittivity for m in self.materials], dtype=np.float64
        )
        return lookup[self.index]

    def material(self, code: int) -> Material:
        return AIR if code == 0 else self.materials[code - 1]

    @property
    def occupancy(self) -> np.ndarray:
        return self.index != 0
