"""
Sample assembly: oracle target plus the full tensor stack per (scene, AP).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from warehouse_sinr.exceptions import ConfigError, EmptySplit, InvalidResolution, InvalidScene
from warehouse_sinr.oracle.propagation import SINR_CLAMP_DB, PropagationParams, sinr_heatmap
from warehouse_sinr.scene.geometry import MIN_CELLS, PermittivityGrid
from warehouse_sinr.scene.layout import (
    ApDefaults,
    ApPlacement,
    WarehouseScene,
    ap_sweep_positions,
    rasterize_materials,
)
from warehouse_sinr.tensors.builders import (
    DEFAULT_AP_SCALE,
    ap_location_tensor,
    distance_tensor,
    los_channel,
    nearest_shelf_distance,
    normalize_sinr,
    permittivity_tensor,
    quadrant_of,
)

logger = logging.getLogger(__name__)

QUADRANTS = ("I", "II", "III", "IV")
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class TensorConfig:
    """
    Tensor stack settings.

    Attributes:
        out_res (int): Cells per side of every tensor (default 64)
        ap_scale (float): Value at the AP cell of the location map (default 12)
        include_aux (bool): Add the LOS and nearest-shelf channels
        include_shelf_mask (bool): Add a shelf occupancy channel to the aux group
        distance_scale_m (float): Divisor for meter-valued channels at model input
        sinr_range_db (Tuple[float, float]): Target normalization range
    """

    out_res: int = 64
    ap_scale: float = DEFAULT_AP_SCALE
    include_aux: bool = True
    include_shelf_mask: bool = False
    distance_scale_m: float = 50.0
    sinr_range_db: Tuple[float, float] = SINR_CLAMP_DB

    def __post_init__(self):
        if self.out_res < MIN_CELLS:
            raise InvalidResolution(f"out_res must be >= {MIN_CELLS}, got {self.out_res}")
        if self.include_shelf_mask and not self.include_aux:
            raise ConfigError("include_shelf_mask requires include_aux")
        if not self.distance_scale_m > 0:
            raise ConfigError(f"distance_scale_m must be positive, got {self.distance_scale_m}")
        if not self.sinr_range_db[0] < self.sinr_range_db[1]:
            raise ConfigError(f"sinr_range_db must be increasing, got {self.sinr_range_db}")

    @property
    def aux_names(self) -> Tuple[str, ...]:
        if not self.include_aux:
            return ()
        names = ("los", "nearest_shelf")
        return names + ("shelf_mask",) if self.include_shelf_mask else names

    @property
    def channel_names(self) -> Tuple[str, ...]:
        """Model input channel order: [distance, aux..., permittivity, ap_location]."""
        return ("distance",) + self.aux_names + ("permittivity", "ap_location")

    @property
    def n_channels(self) -> int:
        return len(self.channel_names)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "out_res": self.out_res,
            "ap_scale": self.ap_scale,
            "include_aux": self.include_aux,
            "include_shelf_mask": self.include_shelf_mask,
            "distance_scale_m": self.distance_scale_m,
            "sinr_range_db": list(self.sinr_range_db),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TensorConfig":
        kwargs = dict(data)
        if "sinr_range_db" in kwargs:
            lo, hi = kwargs["sinr_range_db"]
            kwargs["sinr_range_db"] = (float(lo), float(hi))
        return cls(**kwargs)


def scale_channels(stack: np.ndarray, cfg: TensorConfig) -> np.ndarray:
    """Divide the meter-valued channels of a (C, H, W) stack by cfg.distance_scale_m."""
    stack = np.asarray(stack, dtype=np.float64).copy()
    for k, name in enumerate(cfg.channel_names):
        if name in ("distance", "nearest_shelf"):
            stack[k] /= cfg.distance_scale_m
    return stack.astype(np.float32)


@dataclass(frozen=True)
class SampleMeta:
    scene_id: int
    ap_index: int
    quadrant: str
    x_ap: float
    y_ap: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scene_id": self.scene_id,
            "ap_index": self.ap_index,
            "quadrant": self.quadrant,
            "x_ap": self.x_ap,
            "y_ap": self.y_ap,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SampleMeta":
        return cls(
            scene_id=int(data["scene_id"]),
            ap_index=int(data["ap_index"]),
            quadrant=str(data["quadrant"]),
            x_ap=float(data["x_ap"]),
            y_ap=float(data["y_ap"]),
        )


@dataclass(eq=False)
class SampleTensors:
    """
    One training example, f32. Meter-valued channels are stored unscaled.

    Attributes:
        distance (np.ndarray): (H, W) planar distance to the AP, meters
        permittivity (np.ndarray): (H, W) scaled permittivity, shared by every sample of a scene
        ap_map (np.ndarray): (H, W) scaled delta at the AP cell
        aux (np.ndarray, optional): (k, H, W) LOS mask, nearest-shelf distance, [shelf mask]
        target (np.ndarray): (H, W) normalized SINR in [0, 1]
        meta (SampleMeta): Scene id, AP index, quadrant, AP position
    """

    distance: np.ndarray
    permittivity: np.ndarray
    ap_map: np.ndarray
    aux: Optional[np.ndarray]
    target: np.ndarray
    meta: SampleMeta

    @property
    def resolution(self) -> int:
        return self.target.shape[0]

    def channels(self) -> np.ndarray:
        """Raw (C, H, W) stack in model channel order."""
        parts = [self.distance[None]]
        if self.aux is not None:
            parts.append(self.aux)
        parts += [self.permittivity[None], self.ap_map[None]]
        return np.concatenate(parts, axis=0)

    def model_input(self, cfg: TensorConfig) -> np.ndarray:
        """(C, H, W) float32 with meter-valued channels divided by cfg.distance_scale_m."""
        return scale_channels(self.channels(), cfg)


@dataclass(eq=False)
class Dataset:
    """
    Samples with split tags and provenance.

    Attributes:
        samples (List[SampleTensors]): Ordered by (scene id, AP index)
        split (List[str]): Per-sample tag in {train, val, test}
        resolution (int): Cells per side
        normalization (Tuple[float, float]): (sinr_min_db, sinr_max_db)
        config (TensorConfig): Channel layout used to build the samples
        scenes (List[Dict]): Scene documents indexed by scene id
        seed (int): Split seed
    """

    samples: List[SampleTensors]
    split: List[str]
    resolution: int
    normalization: Tuple[float, float]
    config: TensorConfig = field(default_factory=TensorConfig)
    scenes: List[Dict[str, Any]] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        if len(self.split) != len(self.samples):
            raise ConfigError(f"{len(self.split)} split tags for {len(self.samples)} samples")
        bad = set(self.split) - set(SPLITS)
        if bad:
            raise ConfigError(f"Unknown split tags {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def channel_names(self) -> Tuple[str, ...]:
        return self.config.channel_names

    def indices(self, tag: str) -> List[int]:
        return [i for i, t in enumerate(self.split) if t == tag]

    def require(self, tag: str) -> List[int]:
        """Indices of a split, raising EmptySplit when there are none."""
        found = self.indices(tag)
        if not found:
            raise EmptySplit(f"Dataset has no '{tag}' samples")
        return found

    def inputs(self, indices: Sequence[int]) -> np.ndarray:
        """(N, C, R, R) float32 model inputs."""
        return np.stack([self.samples[i].model_input(self.config) for i in indices])

    def targets(self, indices: Sequence[int]) -> np.ndarray:
        """(N, R, R) float32 normalized targets."""
        return np.stack([self.samples[i].target for i in indices]).astype(np.float32)

    def subset(self, indices: Sequence[int], split: Optional[Sequence[str]] = None) -> "Dataset":
        """New dataset over the given samples, keeping or replacing their tags."""
        indices = list(indices)
        tags = list(split) if split is not None else [self.split[i] for i in indices]
        return replace(self, samples=[self.samples[i] for i in indices], split=tags)

    def retag(self, split: Sequence[str]) -> "Dataset":
        return replace(self, split=list(split))


def assign_split(n: int, train_frac: float, seed: int) -> List[str]:
    """
    Seeded shuffle, first round(train_frac * n) become train, the rest val.

    Args:
        n (int): Number of samples
        train_frac (float): In (0, 1)
        seed (int): Shuffle seed

    Returns:
        List[str]: Tag per sample position
    """
    if not 0.0 < train_frac < 1.0:
        raise ConfigError(f"train_frac must be in (0, 1), got {train_frac}")
    n_train = int(round(train_frac * n))
    if n >= 2:
        n_train = min(max(n_train, 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    tags = ["val"] * n
    for i in order[:n_train]:
        tags[int(i)] = "train"
    return tags


@dataclass(frozen=True)
class _SceneCache:
    grid: PermittivityGrid
    permittivity: np.ndarray
    nearest_shelf: np.ndarray


def _scene_cache(scene: WarehouseScene, cfg: TensorConfig) -> _SceneCache:
    grid = rasterize_materials(scene, cfg.out_res)
    return _SceneCache(
        grid=grid,
        permittivity=permittivity_tensor(grid).astype(np.float32),
        nearest_shelf=nearest_shelf_distance(scene, grid.geometry).astype(np.float32),
    )


def _placement_channels(
    ap: ApPlacement, cfg: TensorConfig, cache: _SceneCache
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    grid = cache.grid
    rows, cols = grid.shape
    res = (grid.geometry.cell_h, grid.geometry.cell_w)
    aux = None
    if cfg.include_aux:
        channels = [los_channel(grid, ap), cache.nearest_shelf]
        if cfg.include_shelf_mask:
            channels.append(grid.occupancy)
        aux = np.stack(channels).astype(np.float32)
    distance = distance_tensor(ap, rows, cols, res).astype(np.float32)
    ap_map = ap_location_tensor(ap, rows, cols, res, cfg.ap_scale).astype(np.float32)
    return distance, ap_map, aux


def build_sample(
    scene: WarehouseScene,
    scene_id: int,
    ap: ApPlacement,
    ap_index: int,
    cfg: TensorConfig,
    params: Optional[PropagationParams] = None,
    cache: Optional[_SceneCache] = None,
) -> SampleTensors:
    """
    Oracle heatmap plus tensor stack for one AP placement.

    Args:
        scene (WarehouseScene): Scene
        scene_id (int): Scene position in the dataset
        ap (ApPlacement): AP
        ap_index (int): Position in the scene's sweep
        cfg (TensorConfig): Tensor settings
        params (PropagationParams, optional): Oracle parameters
        cache (_SceneCache, optional): Per-scene rasters shared across APs

    Returns:
        SampleTensors: Sample at cfg.out_res
    """
    cache = cache or _scene_cache(scene, cfg)
    heatmap = sinr_heatmap(scene, ap, p=params, out_res=cfg.out_res, grid=cache.grid)
    distance, ap_map, aux = _placement_channels(ap, cfg, cache)
    return SampleTensors(
        distance=distance,
        permittivity=cache.permittivity,
        ap_map=ap_map,
        aux=aux,
        target=normalize_sinr(heatmap, *cfg.sinr_range_db).astype(np.float32),
        meta=SampleMeta(
            scene_id=scene_id,
            ap_index=ap_index,
            quadrant=quadrant_of(ap.x_ap, ap.y_ap, scene.width_m, scene.depth_m),
            x_ap=ap.x_ap,
            y_ap=ap.y_ap,
        ),
    )


def placement_inputs(scene: WarehouseScene, ap: ApPlacement, cfg: TensorConfig) -> np.ndarray:
    """
    Scaled (C, H, W) model input for an AP placement, without running the oracle.

    Raises:
        InvalidScene: AP outside the floor
    """
    if not scene.contains(ap.x_ap, ap.y_ap):
        raise InvalidScene(
            f"AP at ({ap.x_ap}, {ap.y_ap}) is outside the {scene.width_m}x{scene.depth_m} m floor"
        )
    cache = _scene_cache(scene, cfg)
    distance, ap_map, aux = _placement_channels(ap, cfg, cache)
    parts = [distance[None]]
    if aux is not None:
        parts.append(aux)
    parts += [cache.permittivity[None], ap_map[None]]
    return scale_channels(np.concatenate(parts, axis=0), cfg)


def build_dataset(
    scenes: Sequence[WarehouseScene],
    sweep_spacing_m: float,
    out_res: int = 64,
    train_frac: float = 0.75,
    seed: int = 0,
    params: Optional[PropagationParams] = None,
    tensor_cfg: Optional[TensorConfig] = None,
    ap: Optional[ApDefaults] = None,
    max_samples: Optional[int] = None,
    quadrants: Optional[Iterable[str]] = None,
    workers: int = 1,
) -> Dataset:
    """
    Sweep every scene, compute oracle targets and tensors, and split.

    Args:
        scenes (Sequence[WarehouseScene]): At least one scene
        sweep_spacing_m (float): AP sweep pitch
        out_res (int): Cells per side (overrides tensor_cfg.out_res)
        train_frac (float): Train fraction in (0, 1)
        seed (int): Split seed
        params (PropagationParams, optional): Oracle parameters
        tensor_cfg (TensorConfig, optional): Channel layout
        ap (ApDefaults, optional): AP height/power/carrier for the sweep
        max_samples (int, optional): Keep only the first max_samples (scene, AP) pairs;
            it can only shrink the sweep
        quadrants (Iterable[str], optional): Keep only APs in these quadrants
        workers (int): Worker threads for sample construction

    Returns:
        Dataset: Samples ordered by (scene id, AP index), seeded train/val split

    Raises:
        ConfigError: No scenes, bad train_frac, max_samples outside [1, sweep size]
        EmptySweep: Propagated from the sweep
    """
    if not scenes:
        raise ConfigError("build_dataset needs at least one scene")
    cfg = replace(tensor_cfg or TensorConfig(), out_res=out_res)
    keep = set(quadrants) if quadrants is not None else None

    jobs = []
    for scene_id, scene in enumerate(scenes):
        for ap_index, placement in enumerate(ap_sweep_positions(scene, sweep_spacing_m, ap)):
            if keep is not None and quadrant_of(
                placement.x_ap, placement.y_ap, scene.width_m, scene.depth_m
            ) not in keep:
                continue
            jobs.append((scene_id, ap_index, placement))
    if not jobs:
        raise EmptySplit("No (scene, AP) pairs left to build")
    if max_samples is not None:
        if not 1 <= max_samples <= len(jobs):
            raise ConfigError(
                f"max_samples must be in [1, {len(jobs)}] (the sweep size), got {max_samples}"
            )
        jobs = jobs[:max_samples]

    used = sorted({scene_id for scene_id, _, _ in jobs})
    caches = {scene_id: _scene_cache(scenes[scene_id], cfg) for scene_id in used}
    logger.info(
        f"Building {len(jobs)} samples from {len(used)} scenes at {cfg.out_res}x{cfg.out_res} "
        f"({workers} workers)"
    )

    def run(job):
        scene_id, ap_index, placement = job
        return build_sample(
            scenes[scene_id], scene_id, placement, ap_index, cfg, params, caches[scene_id]
        )

    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                samples = list(pool.map(run, jobs))
        else:
            samples = [run(job) for job in jobs]
    except Exception as e:
        logger.error(f"❌ Sample construction failed: {e}")
        raise

    split = assign_split(len(samples), train_frac, seed)
    logger.info(
        f"✅ Built {len(samples)} samples: {split.count('train')} train / {split.count('val')} val"
    )
    return Dataset(
        samples=samples,
        split=split,
        resolution=cfg.out_res,
        normalization=cfg.sinr_range_db,
        config=cfg,
        scenes=[s.to_dict() for s in scenes],
        seed=seed,
    )


def filter_quadrants(dataset: Dataset, quadrants: Iterable[str]) -> Dataset:
    """Samples whose AP lies in one of the given quadrants, tags kept."""
    keep = set(quadrants)
    unknown = keep - set(QUADRANTS)
    if unknown:
        raise ConfigError(f"Unknown quadrants {sorted(unknown)}")
    return dataset.subset([i for i, s in enumerate(dataset.samples) if s.meta.quadrant in keep])


def quadrant_holdout(
    dataset: Dataset,
    train_quadrants: Iterable[str],
    test_quadrant: str,
    train_frac: float,
    seed: int,
) -> Dataset:
    """
    Re-tag for quadrant extrapolation: the held-out quadrant becomes test,
    the training quadrants are split train/val, everything else is dropped.
    """
    train_quadrants = set(train_quadrants)
    if test_quadrant in train_quadrants:
        raise ConfigError(f"Quadrant {test_quadrant} is both trained on and held out")
    seen = [i for i, s in enumerate(dataset.samples) if s.meta.quadrant in train_quadrants]
    held = [i for i, s in enumerate(dataset.samples) if s.meta.quadrant == test_quadrant]
    if not seen:
        raise EmptySplit(f"No samples in training quadrants {sorted(train_quadrants)}")
    if not held:
        raise EmptySplit(f"No samples in held-out quadrant {test_quadrant}")
    tags = assign_split(len(seen), train_frac, seed) + ["test"] * len(held)
    return dataset.subset(seen + held, split=tags)
