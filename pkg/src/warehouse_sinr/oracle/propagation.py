"""
Deterministic SINR oracle.

Free-space path loss on the slant distance, a multi-wall penetration loss per
obstacle run crossed on the direct ray, an extra distance-exponent term once
the ray is obstructed, and a thermal noise floor. Multipath and fading are
not modelled.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from warehouse_sinr.exceptions import ConfigError, InvalidResolution, InvalidScene
from warehouse_sinr.oracle.raytrace import crossing_counts
from warehouse_sinr.scene.geometry import MIN_CELLS, GridSpec, PermittivityGrid
from warehouse_sinr.scene.layout import ApPlacement, WarehouseScene, rasterize_materials
from warehouse_sinr.scene.materials import Material

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0
MIN_DISTANCE_M = 0.1
THERMAL_NOISE_DBM_PER_HZ = -174.0
SINR_CLAMP_DB: Tuple[float, float] = (-10.0, 60.0)


@dataclass(frozen=True)
class PropagationParams:
    """
    Link-budget parameters of the oracle.

    Attributes:
        carrier_hz (float): Carrier frequency for APs that leave theirs unset (default 60 GHz)
        bandwidth_hz (float): Receiver bandwidth (default 100 MHz)
        noise_figure_db (float): Receiver noise figure (default 7 dB)
        nlos_exponent_bonus (float): Extra path-loss exponent once the ray is obstructed
        tx_power_dbm (float): Transmit power for APs that leave theirs unset (default 20 dBm)
        clamp_db (Tuple[float, float]): Output SINR range
    """

    carrier_hz: float = 60e9
    bandwidth_hz: float = 100e6
    noise_figure_db: float = 7.0
    nlos_exponent_bonus: float = 1.0
    tx_power_dbm: float = 20.0
    clamp_db: Tuple[float, float] = SINR_CLAMP_DB

    def __post_init__(self):
        if not self.carrier_hz > 0:
            raise ConfigError(f"carrier_hz must be positive, got {self.carrier_hz}")
        if not self.bandwidth_hz > 0:
            raise ConfigError(f"bandwidth_hz must be positive, got {self.bandwidth_hz}")
        if self.nlos_exponent_bonus < 0:
            raise ConfigError(f"nlos_exponent_bonus must be >= 0, got {self.nlos_exponent_bonus}")
        if not self.clamp_db[0] < self.clamp_db[1]:
            raise ConfigError(f"clamp_db must be increasing, got {self.clamp_db}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "carrier_hz": self.carrier_hz,
            "bandwidth_hz": self.bandwidth_hz,
            "noise_figure_db": self.noise_figure_db,
            "nlos_exponent_bonus": self.nlos_exponent_bonus,
            "tx_power_dbm": self.tx_power_dbm,
            "clamp_db": list(self.clamp_db),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PropagationParams":
        kwargs = {k: float(v) for k, v in data.items() if k != "clamp_db"}
        if "clamp_db" in data:
            kwargs["clamp_db"] = (float(data["clamp_db"][0]), float(data["clamp_db"][1]))
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class SinrHeatmap:
    """
    SINR over the floor, dB.

    Attributes:
        values (np.ndarray): (rows, cols) SINR in dB, finite
        geometry (GridSpec): Grid the values live on
        ap (ApPlacement): Serving AP
    """

    values: np.ndarray
    geometry: GridSpec
    ap: ApPlacement

    @property
    def res_m(self) -> float:
        """Cell size along x (equal to cell_h on square floors)."""
        return self.geometry.cell_w

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


def fspl_db(carrier_hz: float, distance_m):
    """
    Free-space path loss 20*log10(4*pi*d*f/c), with d clamped to MIN_DISTANCE_M.

    Args:
        carrier_hz (float): Carrier frequency, > 0
        distance_m (float or np.ndarray): Distance(s) in meters

    Returns:
        float or np.ndarray: Loss in dB
    """
    if not carrier_hz > 0:
        raise ConfigError(f"carrier_hz must be positive, got {carrier_hz}")
    d = np.maximum(np.asarray(distance_m, dtype=np.float64), MIN_DISTANCE_M)
    loss = 20.0 * np.log10(4.0 * np.pi * d * carrier_hz / SPEED_OF_LIGHT)
    return float(loss) if loss.ndim == 0 else loss


def crossing_loss_db(material: Material) -> float:
    """
    Loss of one obstacle crossing.

    Fixed override when set, otherwise two-interface Fresnel slab loss at normal
    incidence: r = (1 - sqrt(eps)) / (1 + sqrt(eps)), t = 1 - r^2, loss = -10*log10(t^2).
    """
    if material.fixed_crossing_loss_db is not None:
        return float(material.fixed_crossing_loss_db)
    n = np.sqrt(material.rel_permittivity)
    r = (1.0 - n) / (1.0 + n)
    t = 1.0 - r * r
    return float(-10.0 * np.log10(t * t))


def noise_floor_dbm(p: PropagationParams) -> float:
    """Thermal noise floor: -174 + 10*log10(B) + NF."""
    return THERMAL_NOISE_DBM_PER_HZ + 10.0 * np.log10(p.bandwidth_hz) + p.noise_figure_db


def received_power_dbm(
    grid: PermittivityGrid, ap: ApPlacement, p: PropagationParams
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Received power of one AP at every cell center.

    Args:
        grid (PermittivityGrid): Rasterized scene
        ap (ApPlacement): Transmitter
        p (PropagationParams): Link parameters

    Returns:
        Tuple[np.ndarray, np.ndarray]: (rows, cols) power in dBm, (rows, cols) crossing counts
    """
    geometry = grid.geometry
    xx, yy = geometry.cell_center_mesh()
    planar = np.hypot(xx - ap.x_ap, yy - ap.y_ap)
    slant = np.sqrt(planar**2 + ap.height_m**2)

    targets = np.stack([xx.ravel(), yy.ravel()], axis=1)
    counts = crossing_counts(grid, ap.position, targets, skip_source_run=True)
    loss_table = np.array([0.0] + [crossing_loss_db(m) for m in grid.materials])
    obstacle_loss = (counts @ loss_table).reshape(geometry.shape)
    n_crossings = counts.sum(axis=1).reshape(geometry.shape)

    # the exponent term only ever adds loss
    distance_term = 10.0 * np.log10(np.maximum(slant, 1.0))
    nlos_loss = np.where(n_crossings > 0, p.nlos_exponent_bonus * distance_term, 0.0)

    tx_power_dbm = p.tx_power_dbm if ap.tx_power_dbm is None else ap.tx_power_dbm
    carrier_hz = p.carrier_hz if ap.carrier_hz is None else ap.carrier_hz
    power = tx_power_dbm - fspl_db(carrier_hz, slant) - obstacle_loss - nlos_loss
    return power, n_crossings


def sinr_heatmap(
    scene: WarehouseScene,
    ap: ApPlacement,
    others: Sequence[ApPlacement] = (),
    p: Optional[PropagationParams] = None,
    out_res: int = 64,
    grid: Optional[PermittivityGrid] = None,
) -> SinrHeatmap:
    """
    SINR heatmap of one serving AP, dB, clamped to p.clamp_db.

    Args:
        scene (WarehouseScene): Scene
        ap (ApPlacement): Serving AP, inside the floor
        others (Sequence[ApPlacement]): Interfering APs; empty means the single-AP case
        p (PropagationParams, optional): Link parameters
        out_res (int): Output cells per side, >= 8
        grid (PermittivityGrid, optional): Pre-rasterized scene at out_res

    Returns:
        SinrHeatmap: Heatmap on the out_res x out_res grid

    Raises:
        InvalidResolution: out_res below 8
        InvalidScene: AP outside the floor
    """
    p = p or PropagationParams()
    if out_res < MIN_CELLS:
        raise InvalidResolution(f"Heatmap resolution must be >= {MIN_CELLS}, got {out_res}")
    for placement in (ap, *others):
        if not scene.contains(placement.x_ap, placement.y_ap):
            raise InvalidScene(
                f"AP at ({placement.x_ap}, {placement.y_ap}) is outside the "
                f"{scene.width_m}x{scene.depth_m} m floor"
            )
    if grid is None or grid.shape != (out_res, out_res):
        grid = rasterize_materials(scene, out_res)

    signal, _ = received_power_dbm(grid, ap, p)
    impairment_mw = np.full(grid.shape, 10.0 ** (noise_floor_dbm(p) / 10.0))
    for other in others:
        interference, _ = received_power_dbm(grid, other, p)
        impairment_mw = impairment_mw + 10.0 ** (interference / 10.0)

    sinr = signal - 10.0 * np.log10(impairment_mw)
    values = np.clip(sinr, *p.clamp_db)
    logger.debug(
        f"SINR at {out_res}x{out_res} for AP ({ap.x_ap}, {ap.y_ap}), {len(others)} interferers"
    )
    return SinrHeatmap(values=values, geometry=grid.geometry, ap=ap)
