"""
Run configuration: defaults, JSON config files, environment, config hashing
and logging setup.
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from dotenv import load_dotenv

from warehouse_sinr.evaluation.scenarios import EvalConfig
from warehouse_sinr.exceptions import ConfigError
from warehouse_sinr.models.networks import ModelConfig
from warehouse_sinr.oracle.propagation import PropagationParams
from warehouse_sinr.scene.layout import LayoutSpec
from warehouse_sinr.tensors.dataset import TensorConfig
from warehouse_sinr.training.trainer import TrainConfig

logger = logging.getLogger(__name__)

LOG_ENV = "WISVA_LOG"
THREADS_ENV = "WISVA_THREADS"
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

_SCALARS = ("seed", "n_scenes", "sweep_spacing_m", "train_frac", "samples", "out_dir", "threads")
_SECTIONS = ("scene", "propagation", "tensors", "model", "train", "eval")
_SCENE_KEYS = {
    "width_m",
    "depth_m",
    "grid_res_m",
    "min_shelves",
    "max_shelves",
    "shelf_size_range",
    "aisle_m",
    "materials",
    "max_attempts",
    "ap",
}


def _check_keys(section: str, data: Dict[str, Any], known: Iterable[str]) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"Config section '{section}' must be an object")
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"Unknown keys in '{section}': {sorted(unknown)}")


def _parse(section: str, parser, data: Dict[str, Any]):
    try:
        return parser(data)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"Invalid '{section}' config: {e}") from e


@dataclass(frozen=True)
class RunConfig:
    """
    Effective configuration of a run.

    Attributes:
        scene (LayoutSpec): Layout generator settings shared by every scene
        propagation (PropagationParams): Oracle parameters
        tensors (TensorConfig): Tensor stack settings
        model (ModelConfig): Architecture; resolution and n_aux follow `tensors`
        train (TrainConfig): Training hyperparameters
        eval (EvalConfig): Scenario settings
        seed (int): Global seed; scene i uses layout seed `seed + i`
        n_scenes (int): Scenes in the generated dataset
        sweep_spacing_m (float): AP sweep pitch
        train_frac (float): Train share of the train/val split
        samples (int, optional): Cap on generated samples
        out_dir (str): Root of run outputs
        threads (int, optional): Worker cap, falls back to WISVA_THREADS then 1
    """

    scene: LayoutSpec = field(default_factory=LayoutSpec)
    propagation: PropagationParams = field(default_factory=PropagationParams)
    tensors: TensorConfig = field(default_factory=TensorConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 42
    n_scenes: int = 5
    sweep_spacing_m: float = 5.0
    train_frac: float = 0.75
    samples: Optional[int] = None
    out_dir: str = "runs"
    threads: Optional[int] = None

    def __post_init__(self):
        if self.n_scenes < 1:
            raise ConfigError(f"n_scenes must be >= 1, got {self.n_scenes}")
        if not self.sweep_spacing_m > 0:
            raise ConfigError(f"sweep_spacing_m must be > 0, got {self.sweep_spacing_m}")
        if not 0.0 < self.train_frac < 1.0:
            raise ConfigError(f"train_frac must be in (0, 1), got {self.train_frac}")
        if self.samples is not None and self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        derived = replace(
            self.model, resolution=self.tensors.out_res, n_aux=len(self.tensors.aux_names)
        )
        object.__setattr__(self, "model", derived)

    @property
    def scene_seeds(self) -> List[int]:
        return [self.seed + i for i in range(self.n_scenes)]

    @property
    def unseen_scene_seed(self) -> int:
        """Layout seed of the few-shot scene, outside the training scenes."""
        return self.seed + self.n_scenes

    @property
    def workers(self) -> int:
        if self.threads is not None:
            return self.threads
        raw = os.getenv(THREADS_ENV)
        if raw:
            try:
                return max(int(raw), 1)
            except ValueError:
                logger.warning(f"Ignoring {THREADS_ENV}={raw!r}, expected an integer")
        return 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scene": self.scene.to_dict(),
            "propagation": self.propagation.to_dict(),
            "tensors": self.tensors.to_dict(),
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "eval": self.eval.to_dict(),
            "seed": self.seed,
            "n_scenes": self.n_scenes,
            "sweep_spacing_m": self.sweep_spacing_m,
            "train_frac": self.train_frac,
            "samples": self.samples,
            "out_dir": self.out_dir,
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Parse a config document. Missing keys keep their defaults.

        Raises:
            ConfigError: Unknown keys or invalid values
        """
        _check_keys("config", data, _SCALARS + _SECTIONS)
        kwargs: Dict[str, Any] = {k: data[k] for k in _SCALARS if k in data}
        if "scene" in data:
            _check_keys("scene", data["scene"], _SCENE_KEYS)
            kwargs["scene"] = _parse("scene", LayoutSpec.from_dict, data["scene"])
        if "propagation" in data:
            known = PropagationParams().to_dict()
            _check_keys("propagation", data["propagation"], known)
            kwargs["propagation"] = _parse(
                "propagation", PropagationParams.from_dict, data["propagation"]
            )
        if "tensors" in data:
            _check_keys("tensors", data["tensors"], TensorConfig().to_dict())
            kwargs["tensors"] = _parse("tensors", TensorConfig.from_dict, data["tensors"])
        if "model" in data:
            _check_keys("model", data["model"], ModelConfig().to_dict())
            kwargs["model"] = _parse("model", ModelConfig.from_dict, data["model"])
        if "train" in data:
            kwargs["train"] = _parse("train", TrainConfig.from_dict, data["train"])
        if "eval" in data:
            kwargs["eval"] = _parse("eval", EvalConfig.from_dict, data["eval"])
        return _parse("config", lambda kw: cls(**kw), kwargs)

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None) -> "RunConfig":
        """Defaults, or the JSON file at path on top of them."""
        if path is None:
            return cls()
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as e:
            raise ConfigError(f"Config file {path} not found") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid JSON ({e})") from e
        return cls.from_dict(data)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """
        Apply command-line overrides; None values are ignored.

        `seed` also reseeds training, `epochs`, `lr`, `batch_size` and `beta_kl`
        go to the train section.
        """
        overrides = {k: v for k, v in overrides.items() if v is not None}
        train_keys = {"epochs", "lr", "batch_size", "beta_kl"}
        train = {k: overrides.pop(k) for k in list(overrides) if k in train_keys}
        if "seed" in overrides:
            train["seed"] = overrides["seed"]
        _check_keys("overrides", overrides, _SCALARS)
        updated = replace(self, **overrides)
        if train:
            reseeded = _parse("train", lambda kw: replace(self.train, **kw), train)
            updated = replace(updated, train=reseeded)
        return updated

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    def write(self, directory: Union[str, Path]) -> Path:
        """Echo the effective config to <directory>/config.json."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / "config.json"
        target.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return target


def config_hash(document: Dict[str, Any]) -> str:
    """First 12 hex digits of the SHA-256 of the canonical JSON."""
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def configure_logging(level: Optional[str] = None) -> int:
    """
    Set up root logging from `level` or WISVA_LOG (after loading .env).

    Returns:
        int: The logging level applied
    """
    load_dotenv()
    name = (level or os.getenv(LOG_ENV) or "info").strip().lower()
    resolved = LOG_LEVELS.get(name)
    logging.basicConfig(level=resolved or logging.INFO, format=LOG_FORMAT, force=True)
    if resolved is None:
        logger.warning(f"Unknown log level {name!r} in {LOG_ENV}, using info")
        resolved = logging.INFO
    return resolved
