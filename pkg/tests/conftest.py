import numpy as np
import pytest

from warehouse_sinr.models.networks import ModelConfig
from warehouse_sinr.scene.layout import Shelf, WarehouseScene
from warehouse_sinr.scene.materials import DEFAULT_MATERIALS
from warehouse_sinr.tensors.dataset import TensorConfig, build_dataset

CONCRETE, WOOD, METAL = DEFAULT_MATERIALS


@pytest.fixture
def small_scene():
    """8 x 8 m floor at 0.5 m with two shelves."""
    return WarehouseScene(
        width_m=8.0,
        depth_m=8.0,
        grid_res_m=0.5,
        shelves=(
            Shelf(2.0, 2.0, 1.0, 3.0, CONCRETE),
            Shelf(5.0, 4.5, 2.0, 1.0, METAL),
        ),
        rng_seed=7,
    )


@pytest.fixture
def tensor_cfg():
    return TensorConfig(out_res=8)


@pytest.fixture
def tiny_model_cfg():
    return ModelConfig(
        resolution=8,
        latent_dim=4,
        n_aux=2,
        branch_channels=(2, 2, 2),
        trunk_channels=2,
        hidden_dim=8,
    )


@pytest.fixture
def small_dataset(small_scene, tensor_cfg):
    """16 samples (4 per quadrant), 12 train / 4 val."""
    return build_dataset(
        [small_scene], 2.0, out_res=8, train_frac=0.75, seed=3, tensor_cfg=tensor_cfg
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
