import time

import numpy as np
import pytest

from warehouse_sinr.exceptions import ConfigError, InvalidResolution, InvalidScene
from warehouse_sinr.oracle.propagation import (
    SINR_CLAMP_DB,
    PropagationParams,
    crossing_loss_db,
    fspl_db,
    noise_floor_dbm,
    received_power_dbm,
    sinr_heatmap,
)
from warehouse_sinr.scene.layout import (
    ApPlacement,
    LayoutSpec,
    Shelf,
    WarehouseScene,
    generate_layout,
    rasterize_materials,
)
from warehouse_sinr.scene.materials import DEFAULT_MATERIALS, Material

CONCRETE, WOOD, METAL = DEFAULT_MATERIALS


def test_fspl_at_one_meter():
    assert fspl_db(60e9, 1.0) == pytest.approx(68.0, abs=0.05)


def test_fspl_distance_doubling():
    assert fspl_db(60e9, 20.0) - fspl_db(60e9, 10.0) == pytest.approx(6.02, abs=0.01)


def test_fspl_clamps_tiny_distances():
    assert fspl_db(60e9, 0.0) == fspl_db(60e9, 0.1)
    with pytest.raises(ConfigError):
        fspl_db(0.0, 1.0)


@pytest.mark.parametrize(
    "bandwidth_hz, noise_figure_db, expected",
    [(100e6, 7.0, -87.0), (1.0, 0.0, -174.0), (100e6, 0.0, -94.0)],
)
def test_noise_floor(bandwidth_hz, noise_figure_db, expected):
    p = PropagationParams(bandwidth_hz=bandwidth_hz, noise_figure_db=noise_figure_db)
    assert noise_floor_dbm(p) == pytest.approx(expected, abs=0.01)


def test_crossing_loss():
    assert crossing_loss_db(METAL) == 15.0
    assert 0.0 < crossing_loss_db(WOOD) < crossing_loss_db(CONCRETE)


@pytest.mark.parametrize("eps, expected", [(1.0, 0.0), (4.0, 1.02)])
def test_slab_loss_values(eps, expected):
    assert crossing_loss_db(Material("slab", eps)) == pytest.approx(expected, abs=0.01)


def test_slab_loss_grows_with_permittivity():
    losses = [crossing_loss_db(Material("slab", eps)) for eps in np.linspace(1.0, 12.0, 23)]
    assert all(a < b for a, b in zip(losses, losses[1:]))


def test_params_round_trip_and_validation():
    p = PropagationParams(noise_figure_db=9.0)
    assert PropagationParams.from_dict(p.to_dict()) == p
    with pytest.raises(ConfigError):
        PropagationParams(clamp_db=(10.0, 10.0))


def test_empty_floor_matches_link_budget():
    scene = WarehouseScene(width_m=8.0, depth_m=8.0, grid_res_m=0.5)
    ap = ApPlacement(3.0, 5.0)
    p = PropagationParams()
    h = sinr_heatmap(scene, ap, p=p, out_res=8)
    xx, yy = h.geometry.cell_center_mesh()
    slant = np.sqrt((xx - 3.0) ** 2 + (yy - 5.0) ** 2 + ap.height_m**2)
    expected = p.tx_power_dbm - fspl_db(p.carrier_hz, slant) - noise_floor_dbm(p)
    np.testing.assert_allclose(h.values, np.clip(expected, *SINR_CLAMP_DB), atol=1e-9)
    assert h.shape == (8, 8)


def test_cell_one_meter_from_ground_level_ap():
    scene = WarehouseScene(width_m=8.0, depth_m=8.0, grid_res_m=0.5)
    h = sinr_heatmap(scene, ApPlacement(0.5, 1.5, height_m=0.0), out_res=8)
    assert h.values[0, 0] == pytest.approx(39.0, abs=0.1)


def test_power_and_carrier_fall_back_to_params():
    scene = WarehouseScene(width_m=8.0, depth_m=8.0, grid_res_m=0.5)
    base = sinr_heatmap(scene, ApPlacement(4.0, 4.0), out_res=8).values
    p = PropagationParams(carrier_hz=2.4e9, tx_power_dbm=30.0)
    moved = sinr_heatmap(scene, ApPlacement(4.0, 4.0), p=p, out_res=8).values
    np.testing.assert_allclose(moved - base, 20.0 * np.log10(60e9 / 2.4e9) + 10.0, atol=1e-9)
    pinned = ApPlacement(4.0, 4.0, tx_power_dbm=20.0, carrier_hz=60e9)
    np.testing.assert_array_equal(sinr_heatmap(scene, pinned, p=p, out_res=8).values, base)


def test_twin_cell_behind_dielectric_shelf():
    slab = Material("slab", 4.0)
    scene = WarehouseScene(
        width_m=8.0,
        depth_m=8.0,
        grid_res_m=0.5,
        shelves=(Shelf(5.0, 4.0, 1.0, 0.5, slab),),
        materials=(slab,),
    )
    ap = ApPlacement(4.25, 4.25)
    p = PropagationParams()
    h = sinr_heatmap(scene, ap, p=p, out_res=16).values
    # both twins sit 3 m from the AP; only the east one looks through the shelf
    nlos_term = p.nlos_exponent_bonus * 10.0 * np.log10(np.hypot(3.0, ap.height_m))
    assert h[8, 2] - h[8, 14] == pytest.approx(crossing_loss_db(slab) + nlos_term, abs=1e-9)
    assert h[8, 2] == h[14, 8]


def test_mirrored_scene_mirrors_heatmap(small_scene):
    mirrored = WarehouseScene(
        width_m=8.0,
        depth_m=8.0,
        grid_res_m=0.5,
        shelves=tuple(
            Shelf(8.0 - s.x1, s.y, s.width, s.depth, s.material) for s in small_scene.shelves
        ),
    )
    h = sinr_heatmap(small_scene, ApPlacement(1.25, 1.25), out_res=16).values
    m = sinr_heatmap(mirrored, ApPlacement(6.75, 1.25), out_res=16).values
    np.testing.assert_allclose(m, h[:, ::-1], rtol=0.0, atol=1e-9)


def test_obstructed_cells_are_exactly_the_weaker_ones(small_scene):
    empty = WarehouseScene(width_m=8.0, depth_m=8.0, grid_res_m=0.5)
    ap = ApPlacement(1.25, 1.25)
    p = PropagationParams()
    blocked = sinr_heatmap(small_scene, ap, p=p, out_res=16).values
    clear = sinr_heatmap(empty, ap, p=p, out_res=16).values
    _, crossings = received_power_dbm(rasterize_materials(small_scene, 16), ap, p)
    assert (crossings > 0).any() and (crossings == 0).any()
    np.testing.assert_array_equal(crossings > 0, blocked < clear)


def test_shelves_only_lower_sinr(small_scene):
    empty = WarehouseScene(width_m=8.0, depth_m=8.0, grid_res_m=0.5)
    ap = ApPlacement(1.0, 1.0)
    blocked = sinr_heatmap(small_scene, ap, out_res=16).values
    clear = sinr_heatmap(empty, ap, out_res=16).values
    assert np.all(blocked <= clear + 1e-12)
    # behind the metal shelf: fixed 15 dB plus the NLOS exponent term
    assert blocked[10, 15] < clear[10, 15] - 15.0


def test_interference_lowers_sinr(small_scene):
    ap = ApPlacement(1.0, 1.0)
    alone = sinr_heatmap(small_scene, ap, out_res=8).values
    shared = sinr_heatmap(small_scene, ap, others=[ApPlacement(7.0, 7.0)], out_res=8).values
    assert np.all(shared <= alone)
    assert np.mean(alone - shared) > 1.0


def test_values_are_clamped():
    scene = WarehouseScene(width_m=8.0, depth_m=8.0, grid_res_m=0.5)
    p = PropagationParams(clamp_db=(0.0, 5.0))
    h = sinr_heatmap(scene, ApPlacement(4.0, 4.0), p=p, out_res=8)
    assert h.values.min() >= 0.0 and h.values.max() <= 5.0


def test_rejects_bad_inputs(small_scene):
    with pytest.raises(InvalidResolution):
        sinr_heatmap(small_scene, ApPlacement(1.0, 1.0), out_res=4)
    with pytest.raises(InvalidScene):
        sinr_heatmap(small_scene, ApPlacement(9.0, 1.0), out_res=8)
    with pytest.raises(InvalidScene):
        sinr_heatmap(small_scene, ApPlacement(1.0, 1.0), others=[ApPlacement(-1.0, 0.0)])


def test_deterministic(small_scene):
    ap = ApPlacement(3.0, 6.0)
    a = sinr_heatmap(small_scene, ap, out_res=16).values
    b = sinr_heatmap(small_scene, ap, out_res=16).values
    assert np.array_equal(a, b)


@pytest.mark.slow
def test_full_floor_heatmap_is_fast():
    scene = generate_layout(42, LayoutSpec(width_m=30.0, depth_m=30.0))
    start = time.perf_counter()
    h = sinr_heatmap(scene, ApPlacement(15.0, 15.0), out_res=152)
    assert time.perf_counter() - start < 1.0
    assert h.shape == (152, 152)
    assert np.all(np.isfinite(h.values))
