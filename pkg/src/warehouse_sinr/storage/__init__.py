"""Binary containers and PNG export."""

from warehouse_sinr.storage.checkpoints import (
    CHECKPOINT_MAGIC,
    Checkpoint,
    read_checkpoint,
    write_checkpoint,
)
from warehouse_sinr.storage.containers import (
    DATASET_MAGIC,
    manifest_path,
    read_dataset,
    read_manifest,
    sha256_file,
    write_dataset,
)
from warehouse_sinr.storage.png_export import colorize, export_heatmap_png, heatmap_image

__all__ = [
    "CHECKPOINT_MAGIC",
    "DATASET_MAGIC",
    "Checkpoint",
    "colorize",
    "export_heatmap_png",
    "heatmap_image",
    "manifest_path",
    "read_checkpoint",
    "read_dataset",
    "read_manifest",
    "sha256_file",
    "write_checkpoint",
    "write_dataset",
]
