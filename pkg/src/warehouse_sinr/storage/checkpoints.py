"""
WSC1 checkpoint container.

Layout (little-endian):
    b"WSC1" | u16 version | u32 header length | header JSON (utf-8) | f32 tensor data

The header lists every tensor (name, group, dims) in storage order, so the
data section is read back by offset. Groups are "param", "adam_m", "adam_v".
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from warehouse_sinr.exceptions import (
    BadMagic,
    KindMismatch,
    StorageError,
    TruncatedFile,
)
from warehouse_sinr.models.networks import MODEL_KINDS, HeatmapNet, ModelConfig
from warehouse_sinr.nn.optim import AdamState

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"WSC1"
CHECKPOINT_VERSION = 1
_PREAMBLE = struct.Struct("<4sHI")
_F32 = np.dtype("<f4")


@dataclass(eq=False)
class Checkpoint:
    """
    Model parameters plus everything needed to resume training.

    Attributes:
        kind (str): "vae" or "ae"
        model_config (Dict): ModelConfig.to_dict()
        params (Dict[str, np.ndarray]): f32 parameter tensors
        adam (AdamState, optional): Optimizer moments and step
        train_config (Dict): TrainConfig snapshot
        epoch (int): Epochs completed
        trace (Dict): LossTrace snapshot
        rng_seed (int): Seed the per-epoch generators derive from
        provenance (Dict): dataset_hash, config_hash, tensor config, normalization
        version (int): Container format version
    """

    kind: str
    model_config: Dict[str, Any]
    params: Dict[str, np.ndarray]
    adam: Optional[AdamState] = None
    train_config: Dict[str, Any] = field(default_factory=dict)
    epoch: int = 0
    trace: Dict[str, Any] = field(default_factory=dict)
    rng_seed: int = 0
    provenance: Dict[str, Any] = field(default_factory=dict)
    version: int = CHECKPOINT_VERSION

    @classmethod
    def from_model(cls, model: HeatmapNet, **kwargs) -> "Checkpoint":
        params = {k: v.copy() for k, v in model.params.items()}
        return cls(kind=model.kind, model_config=model.cfg.to_dict(), params=params, **kwargs)

    def load_into(self, model: HeatmapNet) -> HeatmapNet:
        """
        Copy parameters into an existing model of the same kind.

        Raises:
            KindMismatch: Checkpoint and model kinds differ
            UnknownParameter: Parameter names do not match the model
        """
        if model.kind != self.kind:
            raise KindMismatch(f"Checkpoint holds a {self.kind} model, not {model.kind}")
        model.load_params(self.params)
        return model

    def to_model(self, expected_kind: Optional[str] = None) -> HeatmapNet:
        """Rebuild the model this checkpoint was written from."""
        if expected_kind is not None and expected_kind != self.kind:
            raise KindMismatch(f"Expected a {expected_kind} checkpoint, found {self.kind}")
        if self.kind not in MODEL_KINDS:
            raise StorageError(f"Unknown model kind '{self.kind}' in checkpoint")
        model_cls = MODEL_KINDS[self.kind]
        return model_cls(ModelConfig.from_dict(self.model_config), params=self.params)


def _tensor_table(c: Checkpoint) -> List[tuple]:
    table = [("param", name, c.params[name]) for name in sorted(c.params)]
    if c.adam is not None:
        table += [("adam_m", name, c.adam.m[name]) for name in sorted(c.adam.m)]
        table += [("adam_v", name, c.adam.v[name]) for name in sorted(c.adam.v)]
    return table


def write_checkpoint(c: Checkpoint, path: Union[str, Path]) -> Path:
    """
    Serialize a checkpoint.

    Args:
        c (Checkpoint): Checkpoint to write
        path (str or Path): Destination; parent directories are created

    Returns:
        Path: The written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = _tensor_table(c)
    header = {
        "kind": c.kind,
        "model_config": c.model_config,
        "train_config": c.train_config,
        "epoch": c.epoch,
        "trace": c.trace,
        "rng_seed": c.rng_seed,
        "provenance": c.provenance,
        "adam": None
        if c.adam is None
        else {
            "step": c.adam.step,
            "lr": c.adam.lr,
            "beta1": c.adam.beta1,
            "beta2": c.adam.beta2,
            "eps": c.adam.eps,
        },
        "tensors": [{"group": g, "name": n, "dims": list(t.shape)} for g, n, t in table],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_PREAMBLE.pack(CHECKPOINT_MAGIC, c.version, len(header_bytes)))
        f.write(header_bytes)
        for _, _, tensor in table:
            f.write(np.ascontiguousarray(tensor, dtype=_F32).tobytes())
    logger.debug(f"Wrote {c.kind} checkpoint at epoch {c.epoch} to {path}")
    return path


def read_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Load a checkpoint written by write_checkpoint.

    Raises:
        BadMagic: Not a WSC1 file
        TruncatedFile: Header or tensor data cut short
        StorageError: Unsupported version or malformed header
    """
    raw = Path(path).read_bytes()
    if len(raw) < _PREAMBLE.size or raw[:4] != CHECKPOINT_MAGIC:
        raise BadMagic(f"{path} is not a WSC1 checkpoint")
    _, version, header_len = _PREAMBLE.unpack_from(raw)
    if version != CHECKPOINT_VERSION:
        raise StorageError(f"Unsupported checkpoint version {version} in {path}")
    start = _PREAMBLE.size
    if len(raw) < start + header_len:
        raise TruncatedFile(f"{path}: header truncated")
    try:
        header = json.loads(raw[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise StorageError(f"{path}: unreadable checkpoint header ({e})") from e

    offset = start + header_len
    groups: Dict[str, Dict[str, np.ndarray]] = {"param": {}, "adam_m": {}, "adam_v": {}}
    for entry in header["tensors"]:
        dims = tuple(entry["dims"])
        nbytes = int(np.prod(dims, dtype=np.int64)) * _F32.itemsize
        if offset + nbytes > len(raw):
            raise TruncatedFile(f"{path}: tensor '{entry['name']}' ({entry['group']}) truncated")
        data = np.frombuffer(raw, dtype=_F32, count=nbytes // _F32.itemsize, offset=offset)
        groups[entry["group"]][entry["name"]] = data.reshape(dims).astype(np.float32)
        offset += nbytes

    adam = None
    if header.get("adam") is not None:
        adam = AdamState(m=groups["adam_m"], v=groups["adam_v"], **header["adam"])
    return Checkpoint(
        kind=header["kind"],
        model_config=header["model_config"],
        params=groups["param"],
        adam=adam,
        train_config=header["train_config"],
        epoch=int(header["epoch"]),
        trace=header["trace"],
        rng_seed=int(header["rng_seed"]),
        provenance=header["provenance"],
        version=version,
    )
