"""
WSV1 dataset container with a JSON sidecar manifest.

Binary layout (little-endian):
    b"WSV1" | u32 sample count | u16 H | u16 W | u8 channel count
    then per sample: channel rows (C x H x W f32), then target (H x W f32)

The manifest (``<path>.json``) carries normalization, split tags, per-sample
metadata, channel names, tensor config, scene documents, seed, config hash
and the SHA-256 of the binary.
"""

import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from warehouse_sinr.exceptions import BadMagic, ManifestMismatch, StorageError, TruncatedFile
from warehouse_sinr.tensors.dataset import Dataset, SampleMeta, SampleTensors, TensorConfig

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"WSV1"
_HEADER = struct.Struct("<4sIHHB")
_F32 = np.dtype("<f4")


def manifest_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_dataset(d: Dataset, path: Union[str, Path], config_hash: str = "") -> Path:
    """
    Write the binary container and its manifest.

    Args:
        d (Dataset): Dataset to write
        path (str or Path): Binary path; the manifest goes next to it
        config_hash (str): Effective-config hash recorded in the manifest

    Returns:
        Path: The binary file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n_channels = d.config.n_channels
    with open(path, "wb") as f:
        f.write(_HEADER.pack(DATASET_MAGIC, len(d), d.resolution, d.resolution, n_channels))
        for sample in d.samples:
            f.write(np.ascontiguousarray(sample.channels(), dtype=_F32).tobytes())
            f.write(np.ascontiguousarray(sample.target, dtype=_F32).tobytes())

    manifest = {
        "format": "WSV1",
        "count": len(d),
        "resolution": d.resolution,
        "channels": list(d.channel_names),
        "normalization": list(d.normalization),
        "split": list(d.split),
        "samples": [s.meta.to_dict() for s in d.samples],
        "tensor_config": d.config.to_dict(),
        "scenes": d.scenes,
        "seed": d.seed,
        "config_hash": config_hash,
        "sha256": sha256_file(path),
    }
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    logger.info(f"✅ Wrote {len(d)} samples to {path}")
    return path


def read_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    sidecar = manifest_path(path)
    if not sidecar.exists():
        raise ManifestMismatch(f"Manifest {sidecar} not found")
    try:
        return json.loads(sidecar.read_text())
    except json.JSONDecodeError as e:
        raise ManifestMismatch(f"Manifest {sidecar} is not valid JSON ({e})") from e


def read_dataset(path: Union[str, Path]) -> Dataset:
    """
    Read a dataset written by write_dataset.

    Raises:
        BadMagic: Not a WSV1 file
        TruncatedFile: File ends inside a sample (index in the message)
        ManifestMismatch: Missing manifest, hash or dims disagree with the binary
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 4 or raw[:4] != DATASET_MAGIC:
        raise BadMagic(f"{path} is not a WSV1 dataset")
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"{path}: header truncated")
    _, count, h, w, n_channels = _HEADER.unpack_from(raw)

    sample_floats = (n_channels + 1) * h * w
    sample_bytes = sample_floats * _F32.itemsize
    available = (len(raw) - _HEADER.size) // sample_bytes if sample_bytes else count
    if available < count:
        raise TruncatedFile(
            f"{path}: sample {available} of {count} is truncated "
            f"({len(raw)} bytes, expected {_HEADER.size + count * sample_bytes})"
        )

    manifest = read_manifest(path)
    if manifest.get("sha256") != hashlib.sha256(raw).hexdigest():
        raise ManifestMismatch(f"{path}: content hash does not match the manifest")
    if manifest.get("count") != count or manifest.get("resolution") != h or h != w:
        raise ManifestMismatch(f"{path}: dims {count}x{h}x{w} do not match the manifest")
    cfg = TensorConfig.from_dict(manifest["tensor_config"])
    if cfg.n_channels != n_channels or list(cfg.channel_names) != manifest.get("channels"):
        listed = manifest.get("channels")
        raise ManifestMismatch(f"{path}: {n_channels} channels, manifest lists {listed}")

    n_aux = len(cfg.aux_names)
    data = np.frombuffer(raw, dtype=_F32, count=count * sample_floats, offset=_HEADER.size)
    data = data.reshape(count, n_channels + 1, h, w)
    samples = []
    # scenes share one permittivity array in memory
    permittivity_by_scene: Dict[int, np.ndarray] = {}
    for k in range(count):
        block = data[k].astype(np.float32)
        meta = SampleMeta.from_dict(manifest["samples"][k])
        permittivity = permittivity_by_scene.setdefault(meta.scene_id, block[1 + n_aux])
        samples.append(
            SampleTensors(
                distance=block[0],
                permittivity=permittivity,
                ap_map=block[2 + n_aux],
                aux=block[1 : 1 + n_aux] if n_aux else None,
                target=block[n_channels],
                meta=meta,
            )
        )
    try:
        return Dataset(
            samples=samples,
            split=list(manifest["split"]),
            resolution=h,
            normalization=tuple(manifest["normalization"]),
            config=cfg,
            scenes=manifest.get("scenes", []),
            seed=int(manifest.get("seed", 0)),
        )
    except StorageError:
        raise
    except Exception as e:
        raise ManifestMismatch(f"{path}: manifest rejected ({e})") from e
