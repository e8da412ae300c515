"""
Warehouse layouts: floor extent, shelves and AP placements.

Layouts are generated by seeded rejection sampling, so the same (seed, spec)
always yields the same scene.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from warehouse_sinr.exceptions import EmptySweep, InvalidScene, PlacementExhausted
from warehouse_sinr.scene.geometry import MIN_CELLS, GridSpec, PermittivityGrid
from warehouse_sinr.scene.materials import DEFAULT_MATERIALS, Material

logger = logging.getLogger(__name__)

PLACEMENT_BUDGET = 10_000


@dataclass(frozen=True)
class Shelf:
    """
    Axis-aligned rectangular shelf footprint.

    Attributes:
        x (float): Origin (lower-left corner) x, meters
        y (float): Origin y, meters
        width (float): Extent along x, meters
        depth (float): Extent along y, meters
        material (Material): Shelf material
    """

    x: float
    y: float
    width: float
    depth: float
    material: Material

    def __post_init__(self):
        if not (self.width > 0 and self.depth > 0):
            raise InvalidScene(f"Shelf dimensions must be positive, got {self.width}x{self.depth}")

    @property
    def x1(self) -> float:
        return self.x + self.width

    @property
    def y1(self) -> float:
        return self.y + self.depth

    def contains(self, x: float, y: float) -> bool:
        """Closed on the lower/left edges, open on the upper/right edges."""
        return self.x <= x < self.x1 and self.y <= y < self.y1

    def conflicts(self, other: "Shelf", clearance: float = 0.0) -> bool:
        """True if the footprints overlap or are closer than clearance."""
        return (
            self.x < other.x1 + clearance
            and other.x < self.x1 + clearance
            and self.y < other.y1 + clearance
            and other.y < self.y1 + clearance
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x,
            "y": self.y,
            "width": self.width,
            "depth": self.depth,
            "material": self.material.name,
        }


@dataclass(frozen=True)
class ApPlacement:
    """
    One access point.

    Attributes:
        x_ap (float): Planar x position, meters
        y_ap (float): Planar y position, meters
        height_m (float): Mounting height above the floor, default 15 m
        tx_power_dbm (float, optional): Transmit power; None uses the oracle's tx_power_dbm
        carrier_hz (float, optional): Carrier frequency; None uses the oracle's carrier_hz
        omnidirectional (bool): Beam pattern flag, always True for now
    """

    x_ap: float
    y_ap: float
    height_m: float = 15.0
    tx_power_dbm: Optional[float] = None
    carrier_hz: Optional[float] = None
    omnidirectional: bool = True

    def __post_init__(self):
        if self.tx_power_dbm is not None and not math.isfinite(self.tx_power_dbm):
            raise InvalidScene(f"AP transmit power must be finite, got {self.tx_power_dbm}")
        if self.carrier_hz is not None and not self.carrier_hz > 0:
            raise InvalidScene(f"AP carrier must be positive, got {self.carrier_hz}")
        if not self.omnidirectional:
            raise InvalidScene("Only omnidirectional APs are supported")

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x_ap, self.y_ap)

    def to_dict(self) -> Dict[str, Any]:
        data = {"x_ap": self.x_ap, "y_ap": self.y_ap, "height_m": self.height_m}
        return {**data, **_radio_fields(self.tx_power_dbm, self.carrier_hz)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ApPlacement":
        return cls(
            **{k: float(v) for k, v in data.items() if k != "omnidirectional" and v is not None}
        )


def _radio_fields(tx_power_dbm: Optional[float], carrier_hz: Optional[float]) -> Dict[str, float]:
    data = {}
    if tx_power_dbm is not None:
        data["tx_power_dbm"] = tx_power_dbm
    if carrier_hz is not None:
        data["carrier_hz"] = carrier_hz
    return data


@dataclass(frozen=True)
class ApDefaults:
    """
    AP parameters shared by every placement of a sweep (scene spec "ap" block).

    Power and carrier left unset fall back to the oracle's PropagationParams.
    """

    height_m: float = 15.0
    tx_power_dbm: Optional[float] = None
    carrier_hz: Optional[float] = None

    def __post_init__(self):
        if not self.height_m >= 0:
            raise InvalidScene(f"AP height must be >= 0, got {self.height_m}")
        # placement validation covers power and carrier
        self.place(0.0, 0.0)

    def place(self, x: float, y: float) -> ApPlacement:
        return ApPlacement(x, y, self.height_m, self.tx_power_dbm, self.carrier_hz)

    def to_dict(self) -> Dict[str, Any]:
        return {"height_m": self.height_m, **_radio_fields(self.tx_power_dbm, self.carrier_hz)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ApDefaults":
        return cls(**{k: float(v) for k, v in data.items() if v is not None})


@dataclass(frozen=True)
class WarehouseScene:
    """
    Geometry and materials of one warehouse layout.

    Attributes:
        width_m (float): Floor extent along x (default 60 m)
        depth_m (float): Floor extent along y (default 60 m)
        grid_res_m (float): Native raster resolution (default 0.11 m)
        shelves (Tuple[Shelf, ...]): Non-overlapping shelf footprints
        materials (Tuple[Material, ...]): Material table
        rng_seed (int): Seed the layout was generated from
        min_shelves (int): Configured lower bound on the shelf count
    """

    width_m: float = 60.0
    depth_m: float = 60.0
    grid_res_m: float = 0.11
    shelves: Tuple[Shelf, ...] = ()
    materials: Tuple[Material, ...] = DEFAULT_MATERIALS
    rng_seed: int = 0
    min_shelves: int = 0

    def __post_init__(self):
        if self.width_m / self.grid_res_m < MIN_CELLS or self.depth_m / self.grid_res_m < MIN_CELLS:
            raise InvalidScene(
                f"Floor {self.width_m}x{self.depth_m} m at {self.grid_res_m} m/cell "
                f"is smaller than {MIN_CELLS}x{MIN_CELLS} cells"
            )
        names = [m.name for m in self.materials]
        if len(set(names)) != len(names):
            raise InvalidScene(f"Duplicate material names in {names}")
        if len(self.shelves) < self.min_shelves:
            raise InvalidScene(
                f"Scene has {len(self.shelves)} shelves, fewer than the minimum {self.min_shelves}"
            )
        for shelf in self.shelves:
            if shelf.material not in self.materials:
                raise InvalidScene(f"Shelf material '{shelf.material.name}' is not in the table")
            if shelf.x < 0 or shelf.y < 0 or shelf.x1 > self.width_m or shelf.y1 > self.depth_m:
                raise InvalidScene(f"Shelf at ({shelf.x}, {shelf.y}) leaves the floor")
        for i, a in enumerate(self.shelves):
            for b in self.shelves[i + 1 :]:
                if a.conflicts(b):
                    raise InvalidScene(f"Shelves at ({a.x}, {a.y}) and ({b.x}, {b.y}) overlap")

    @property
    def center(self) -> Tuple[float, float]:
        return (self.width_m / 2.0, self.depth_m / 2.0)

    def native_grid(self) -> GridSpec:
        return GridSpec.native(self.width_m, self.depth_m, self.grid_res_m)

    def grid(self, out_res: Optional[int] = None) -> GridSpec:
        """Model-resolution grid (out_res x out_res), or the native grid when out_res is None."""
        if out_res is None:
            return self.native_grid()
        return GridSpec.square(self.width_m, self.depth_m, out_res)

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width_m and 0.0 <= y <= self.depth_m

    def material_code(self, material: Material) -> int:
        return self.materials.index(material) + 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "width_m": self.width_m,
            "depth_m": self.depth_m,
            "grid_res_m": self.grid_res_m,
            "seed": self.rng_seed,
            "min_shelves": self.min_shelves,
            "materials": [m.to_dict() for m in self.materials],
            "shelves": [s.to_dict() for s in self.shelves],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WarehouseScene":
        materials = tuple(Material.from_dict(m) for m in data["materials"])
        by_name = {m.name: m for m in materials}
        try:
            shelves = tuple(
                Shelf(s["x"], s["y"], s["width"], s["depth"], by_name[s["material"]])
                for s in data.get("shelves", [])
            )
        except KeyError as e:
            raise InvalidScene(f"Shelf references unknown material {e}") from e
        return cls(
            width_m=float(data["width_m"]),
            depth_m=float(data["depth_m"]),
            grid_res_m=float(data["grid_res_m"]),
            shelves=shelves,
            materials=materials,
            rng_seed=int(data.get("seed", 0)),
            min_shelves=int(data.get("min_shelves", 0)),
        )


@dataclass(frozen=True)
class LayoutSpec:
    """
    Parameters of the procedural layout generator (the scene spec JSON).

    Attributes:
        width_m, depth_m (float): Floor extent
        grid_res_m (float): Native raster resolution
        min_shelves (int): Lower bound on the shelf count (default 19)
        max_shelves (int, optional): Upper bound; defaults to min_shelves
        shelf_width_range, shelf_depth_range (Tuple[float, float]): Footprint ranges, meters
        aisle_m (float): Minimum clearance kept between shelves
        materials (Tuple[Material, ...]): Materials shelves are drawn from
        max_attempts (int): Rejection sampling budget
        ap (ApDefaults): AP parameters used by sweeps over this layout
    """

    width_m: float = 60.0
    depth_m: float = 60.0
    grid_res_m: float = 0.11
    min_shelves: int = 19
    max_shelves: Optional[int] = None
    shelf_width_range: Tuple[float, float] = (1.0, 2.0)
    shelf_depth_range: Tuple[float, float] = (3.0, 6.0)
    aisle_m: float = 1.0
    materials: Tuple[Material, ...] = DEFAULT_MATERIALS
    max_attempts: int = PLACEMENT_BUDGET
    ap: ApDefaults = field(default_factory=ApDefaults)

    def __post_init__(self):
        if self.min_shelves < 0:
            raise InvalidScene(f"min_shelves must be >= 0, got {self.min_shelves}")
        if self.max_shelves is not None and self.max_shelves < self.min_shelves:
            raise InvalidScene("max_shelves must be >= min_shelves")
        for label, (lo, hi), extent in (
            ("width", self.shelf_width_range, self.width_m),
            ("depth", self.shelf_depth_range, self.depth_m),
        ):
            if not 0 < lo <= hi:
                raise InvalidScene(
                    f"Shelf {label} range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
                )
            if hi > extent:
                raise InvalidScene(f"Shelf {label} up to {hi} m does not fit a {extent} m floor")
        if self.aisle_m < 0:
            raise InvalidScene(f"aisle_m must be >= 0, got {self.aisle_m}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "width_m": self.width_m,
            "depth_m": self.depth_m,
            "grid_res_m": self.grid_res_m,
            "min_shelves": self.min_shelves,
            "max_shelves": self.max_shelves,
            "shelf_size_range": [list(self.shelf_width_range), list(self.shelf_depth_range)],
            "aisle_m": self.aisle_m,
            "materials": [m.to_dict() for m in self.materials],
            "max_attempts": self.max_attempts,
            "ap": self.ap.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LayoutSpec":
        """Parse a scene spec document; missing keys keep their defaults, "seed" is ignored here."""
        kwargs: Dict[str, Any] = {}
        for key in ("width_m", "depth_m", "grid_res_m", "aisle_m"):
            if key in data:
                kwargs[key] = float(data[key])
        for key in ("min_shelves", "max_attempts"):
            if key in data:
                kwargs[key] = int(data[key])
        if data.get("max_shelves") is not None:
            kwargs["max_shelves"] = int(data["max_shelves"])
        if "shelf_size_range" in data:
            width_range, depth_range = data["shelf_size_range"]
            kwargs["shelf_width_range"] = (float(width_range[0]), float(width_range[1]))
            kwargs["shelf_depth_range"] = (float(depth_range[0]), float(depth_range[1]))
        if "materials" in data:
            kwargs["materials"] = tuple(Material.from_dict(m) for m in data["materials"])
        if "ap" in data:
            kwargs["ap"] = ApDefaults.from_dict(data["ap"])
        return cls(**kwargs)


def generate_layout(seed: int, spec: LayoutSpec) -> WarehouseScene:
    """
    Place non-overlapping axis-aligned shelves by seeded rejection sampling.

    Args:
        seed (int): Layout seed
        spec (LayoutSpec): Generator parameters

    Returns:
        WarehouseScene: Deterministic function of (seed, spec)

    Raises:
        PlacementExhausted: The shelf count could not be met within spec.max_attempts draws
    """
    rng = np.random.default_rng(seed)
    if spec.max_shelves is None:
        target = spec.min_shelves
    else:
        target = int(rng.integers(spec.min_shelves, spec.max_shelves + 1))

    if target > 0 and not spec.materials:
        raise InvalidScene("Shelves requested but the material table is empty")

    shelves: List[Shelf] = []
    attempts = 0
    while len(shelves) < target:
        if attempts >= spec.max_attempts:
            raise PlacementExhausted(
                f"Placed {len(shelves)} of {target} shelves after {attempts} attempts "
                f"(seed={seed}, floor {spec.width_m}x{spec.depth_m} m)"
            )
        attempts += 1
        width = round(float(rng.uniform(*spec.shelf_width_range)), 2)
        depth = round(float(rng.uniform(*spec.shelf_depth_range)), 2)
        x = round(float(rng.uniform(0.0, spec.width_m - width)), 2)
        y = round(float(rng.uniform(0.0, spec.depth_m - depth)), 2)
        material = spec.materials[int(rng.integers(len(spec.materials)))]
        candidate = Shelf(x, y, width, depth, material)
        if any(candidate.conflicts(s, spec.aisle_m) for s in shelves):
            continue
        shelves.append(candidate)

    logger.debug(f"Layout seed={seed}: {len(shelves)} shelves after {attempts} attempts")
    return WarehouseScene(
        width_m=spec.width_m,
        depth_m=spec.depth_m,
        grid_res_m=spec.grid_res_m,
        shelves=tuple(shelves),
        materials=spec.materials,
        rng_seed=seed,
        min_shelves=spec.min_shelves,
    )


def rasterize_materials(
    scene: WarehouseScene, out_res: Optional[int] = None, geometry: Optional[GridSpec] = None
) -> PermittivityGrid:
    """
    Rasterize shelf materials onto the scene grid.

    A cell belongs to a shelf when its center lies inside the footprint
    (closed lower/left edges, open upper/right edges); other cells are air.

    Args:
        scene (WarehouseScene): Valid scene
        out_res (int, optional): Rasterize on an out_res x out_res grid instead of the native one
        geometry (GridSpec, optional): Explicit grid, overrides out_res

    Returns:
        PermittivityGrid: Material codes on the grid
    """
    geometry = geometry or scene.grid(out_res)
    index = np.zeros(geometry.shape, dtype=np.int16)
    xs, ys = geometry.cell_centers()
    for shelf in scene.shelves:
        cols = (xs >= shelf.x) & (xs < shelf.x1)
        rows = (ys >= shelf.y) & (ys < shelf.y1)
        index[np.ix_(rows, cols)] = scene.material_code(shelf.material)
    return PermittivityGrid(index=index, materials=scene.materials, geometry=geometry)


def ap_sweep_positions(
    scene: WarehouseScene, spacing_m: float, ap: Optional[ApDefaults] = None
) -> List[ApPlacement]:
    """
    Grid of AP positions at (spacing/2 + i*spacing, spacing/2 + j*spacing), x fastest.

    Positions over shelves are kept: APs hang above the racks.

    Args:
        scene (WarehouseScene): Scene to sweep
        spacing_m (float): Sweep pitch, > 0
        ap (ApDefaults, optional): Height/power/carrier for every placement

    Returns:
        List[ApPlacement]: Row-major sweep

    Raises:
        EmptySweep: spacing exceeds the floor extent
    """
    if not spacing_m > 0:
        raise EmptySweep(f"Sweep spacing must be positive, got {spacing_m}")
    ap = ap or ApDefaults()
    # tolerance keeps exact multiples (60 / 5) from flooring down
    nx = int(math.floor(scene.width_m / spacing_m + 1e-9))
    ny = int(math.floor(scene.depth_m / spacing_m + 1e-9))
    if nx < 1 or ny < 1:
        raise EmptySweep(
            f"Spacing {spacing_m} m exceeds the {scene.width_m}x{scene.depth_m} m floor"
        )
    half = spacing_m / 2.0
    return [
        ap.place(half + i * spacing_m, half + j * spacing_m) for j in range(ny) for i in range(nx)
    ]
