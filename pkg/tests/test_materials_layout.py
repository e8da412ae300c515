import numpy as np
import pytest

from warehouse_sinr.exceptions import EmptySweep, InvalidScene, PlacementExhausted
from warehouse_sinr.scene.geometry import GridSpec
from warehouse_sinr.scene.layout import (
    ApDefaults,
    ApPlacement,
    LayoutSpec,
    Shelf,
    WarehouseScene,
    ap_sweep_positions,
    generate_layout,
    rasterize_materials,
)
from warehouse_sinr.scene.materials import AIR, DEFAULT_MATERIALS, Material

CONCRETE, WOOD, METAL = DEFAULT_MATERIALS


def test_material_validation():
    with pytest.raises(InvalidScene):
        Material("foam", 0.5)
    with pytest.raises(InvalidScene):
        Material("", 2.0)
    with pytest.raises(InvalidScene):
        Material("lead", 3.0, fixed_crossing_loss_db=-1.0)
    assert AIR.rel_permittivity == 1.0
    assert METAL.fixed_crossing_loss_db == 15.0


def test_material_dict_round_trip():
    for material in DEFAULT_MATERIALS:
        assert Material.from_dict(material.to_dict()) == material


def test_shelf_footprint():
    shelf = Shelf(1.0, 2.0, 2.0, 3.0, WOOD)
    assert (shelf.x1, shelf.y1) == (3.0, 5.0)
    assert shelf.contains(1.0, 2.0)
    assert not shelf.contains(3.0, 2.5)
    assert shelf.conflicts(Shelf(2.5, 4.0, 1.0, 1.0, WOOD))
    assert not shelf.conflicts(Shelf(3.5, 2.0, 1.0, 1.0, WOOD))
    assert shelf.conflicts(Shelf(3.5, 2.0, 1.0, 1.0, WOOD), clearance=1.0)
    with pytest.raises(InvalidScene):
        Shelf(0.0, 0.0, 0.0, 1.0, WOOD)


@pytest.mark.parametrize(
    "shelves",
    [
        (Shelf(7.5, 1.0, 1.0, 1.0, CONCRETE),),
        (Shelf(1.0, 1.0, 2.0, 2.0, CONCRETE), Shelf(2.0, 2.0, 2.0, 2.0, WOOD)),
        (Shelf(1.0, 1.0, 1.0, 1.0, Material("glass", 6.0)),),
    ],
    ids=["off-floor", "overlap", "unknown-material"],
)
def test_invalid_scenes(shelves):
    with pytest.raises(InvalidScene):
        WarehouseScene(width_m=8.0, depth_m=8.0, grid_res_m=0.5, shelves=shelves)


def test_scene_needs_min_shelves_and_cells():
    with pytest.raises(InvalidScene):
        WarehouseScene(width_m=8.0, depth_m=8.0, grid_res_m=0.5, min_shelves=1)
    with pytest.raises(InvalidScene):
        WarehouseScene(width_m=2.0, depth_m=2.0, grid_res_m=0.5)


def test_scene_dict_round_trip(small_scene):
    restored = WarehouseScene.from_dict(small_scene.to_dict())
    assert restored == small_scene


def test_generate_layout_is_deterministic():
    spec = LayoutSpec(width_m=30.0, depth_m=30.0, min_shelves=19)
    a = generate_layout(5, spec)
    b = generate_layout(5, spec)
    c = generate_layout(6, spec)
    assert a == b
    assert a.shelves != c.shelves
    assert len(a.shelves) == 19


def test_generate_layout_keeps_aisles():
    spec = LayoutSpec(width_m=30.0, depth_m=30.0, min_shelves=10, max_shelves=15, aisle_m=1.0)
    scene = generate_layout(11, spec)
    assert 10 <= len(scene.shelves) <= 15
    for i, a in enumerate(scene.shelves):
        for b in scene.shelves[i + 1 :]:
            assert not a.conflicts(b, clearance=1.0)


def test_generate_layout_exhausts_budget():
    spec = LayoutSpec(
        width_m=8.0,
        depth_m=8.0,
        grid_res_m=0.5,
        min_shelves=30,
        shelf_width_range=(2.0, 3.0),
        shelf_depth_range=(2.0, 3.0),
        max_attempts=200,
    )
    with pytest.raises(PlacementExhausted):
        generate_layout(0, spec)


def test_layout_spec_from_dict_ignores_seed():
    spec = LayoutSpec.from_dict(
        {"width_m": 30, "depth_m": 30, "seed": 9, "shelf_size_range": [[1, 2], [3, 4]]}
    )
    assert spec.width_m == 30.0
    assert spec.shelf_depth_range == (3.0, 4.0)


def test_rasterize_uses_cell_centers(small_scene):
    grid = rasterize_materials(small_scene)
    assert grid.shape == (16, 16)
    concrete = small_scene.material_code(CONCRETE)
    # shelf x in [2, 3), y in [2, 5): cols 4..5, rows 4..9
    assert np.all(grid.index[4:10, 4:6] == concrete)
    assert grid.index[3, 4] == 0
    assert grid.index[10, 4] == 0
    assert grid.material(0) is AIR
    assert grid.occupancy.sum() == 6 * 2 + 2 * 4


def test_rasterize_at_model_resolution(small_scene):
    grid = rasterize_materials(small_scene, out_res=8)
    assert grid.geometry == GridSpec(8.0, 8.0, 8, 8)
    assert grid.permittivity[2, 2] == pytest.approx(CONCRETE.rel_permittivity)
    assert grid.permittivity[0, 0] == 1.0


def test_sweep_positions(small_scene):
    aps = ap_sweep_positions(small_scene, 2.0)
    assert len(aps) == 16
    assert aps[0].position == (1.0, 1.0)
    assert aps[1].position == (3.0, 1.0)
    assert aps[-1].position == (7.0, 7.0)
    assert all(ap.height_m == 15.0 for ap in aps)


def test_sweep_exact_multiple():
    scene = WarehouseScene(width_m=60.0, depth_m=60.0)
    assert len(ap_sweep_positions(scene, 5.0)) == 144


def test_sweep_too_coarse(small_scene):
    with pytest.raises(EmptySweep):
        ap_sweep_positions(small_scene, 10.0)


def test_ap_placement_validation():
    with pytest.raises(InvalidScene):
        ApPlacement(1.0, 1.0, carrier_hz=0.0)
    with pytest.raises(InvalidScene):
        ApPlacement(1.0, 1.0, omnidirectional=False)
    ap = ApPlacement(1.0, 2.0, height_m=10.0)
    assert ApPlacement.from_dict(ap.to_dict()) == ap


def test_ap_defaults_leave_radio_to_the_oracle():
    ap = ApDefaults(height_m=3.0)
    assert ap.to_dict() == {"height_m": 3.0}
    assert ap.place(1.0, 2.0) == ApPlacement(1.0, 2.0, height_m=3.0)
    assert ApDefaults.from_dict({"height_m": 3.0, "carrier_hz": None}) == ap
    pinned = ApDefaults.from_dict({"carrier_hz": 2.4e9})
    assert pinned.place(0.0, 0.0).carrier_hz == 2.4e9
    with pytest.raises(InvalidScene):
        ApDefaults(height_m=-1.0)
    with pytest.raises(InvalidScene):
        ApDefaults(carrier_hz=0.0)
