"""Three-branch heatmap VAE and the AE baseline."""

from warehouse_sinr.models.networks import (
    MODEL_KINDS,
    HeatmapAutoencoder,
    HeatmapNet,
    HeatmapVAE,
    ModelConfig,
    build_model,
    reparameterize,
)

__all__ = [
    "MODEL_KINDS",
    "HeatmapAutoencoder",
    "HeatmapNet",
    "HeatmapVAE",
    "ModelConfig",
    "build_model",
    "reparameterize",
]
