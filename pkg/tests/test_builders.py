import numpy as np
import pytest

from warehouse_sinr.exceptions import DegenerateRange, InvalidResolution
from warehouse_sinr.oracle.raytrace import ray_crossings
from warehouse_sinr.scene.layout import (
    ApPlacement,
    LayoutSpec,
    generate_layout,
    rasterize_materials,
)
from warehouse_sinr.tensors.builders import (
    ap_cell,
    ap_location_tensor,
    aux_channels,
    denormalize_sinr,
    distance_tensor,
    nearest_shelf_distance,
    normalize_sinr,
    permittivity_tensor,
    quadrant_of,
    resize,
)

SMALL = LayoutSpec(
    width_m=8.0,
    depth_m=8.0,
    grid_res_m=0.5,
    min_shelves=3,
    shelf_width_range=(1.0, 2.0),
    shelf_depth_range=(1.0, 3.0),
    aisle_m=0.5,
)


def _brute_nearest(scene, x, y):
    best = float(np.hypot(scene.width_m, scene.depth_m))
    for shelf in scene.shelves:
        dx = max(shelf.x - x, 0.0, x - shelf.x1)
        dy = max(shelf.y - y, 0.0, y - shelf.y1)
        best = min(best, float(np.hypot(dx, dy)))
    return best


@pytest.mark.parametrize("seed", range(50))
def test_builders_match_per_cell_evaluation(seed):
    rng = np.random.default_rng(seed)
    scene = generate_layout(seed, SMALL)
    ap = ApPlacement(*rng.uniform(0.0, 8.0, size=2))
    grid = rasterize_materials(scene, 8)
    distance = distance_tensor(ap, 8, 8, 1.0)
    ap_map = ap_location_tensor(ap, 8, 8, 1.0)
    eps = permittivity_tensor(grid)
    aux = aux_channels(scene, ap, 8, 8)
    eps_max = max(m.rel_permittivity for m in scene.materials)

    for i in range(8):
        for j in range(8):
            x, y = j + 0.5, i + 0.5
            assert distance[i, j] == pytest.approx(np.hypot(x - ap.x_ap, y - ap.y_ap), abs=1e-12)
            in_ap_cell = (i, j) == (min(int(ap.y_ap), 7), min(int(ap.x_ap), 7))
            assert ap_map[i, j] == (12.0 if in_ap_cell else 0.0)
            material = grid.material(int(grid.index[i, j]))
            assert eps[i, j] == pytest.approx((material.rel_permittivity - 1.0) / (eps_max - 1.0))
            los = not ray_crossings(grid, ap.position, (x, y), skip_source_run=True)
            assert aux[0, i, j] == float(los)
            assert aux[1, i, j] == pytest.approx(_brute_nearest(scene, x, y), abs=1e-12)


def test_ap_cell_on_rectangular_cells():
    ap = ApPlacement(5.9, 1.2)
    assert ap_cell(ap, 8, 8, (0.5, 1.0)) == (2, 5)


def test_ap_location_scale():
    t = ap_location_tensor(ApPlacement(2.5, 6.5), 8, 8, 1.0, scale=3.0)
    assert t.sum() == 3.0
    assert np.unravel_index(t.argmax(), t.shape) == (6, 2)


def test_aux_with_shelf_mask(small_scene):
    aux = aux_channels(small_scene, ApPlacement(1.0, 1.0), 16, 16, include_shelf_mask=True)
    assert aux.shape == (3, 16, 16)
    assert aux[2].sum() == 20
    assert np.all(aux[1][aux[2] == 1] == 0.0)


def test_empty_floor_is_all_line_of_sight():
    scene = generate_layout(0, LayoutSpec(width_m=8.0, depth_m=8.0, grid_res_m=0.5, min_shelves=0))
    aux = aux_channels(scene, ApPlacement(4.0, 4.0), 8, 8)
    assert np.all(aux[0] == 1.0)
    np.testing.assert_allclose(nearest_shelf_distance(scene, scene.grid(8)), np.hypot(8.0, 8.0))


def test_normalization():
    values = np.array([-20.0, -10.0, 25.0, 60.0, 80.0])
    np.testing.assert_allclose(normalize_sinr(values), [0.0, 0.0, 0.5, 1.0, 1.0])
    inside = np.linspace(-10.0, 60.0, 15)
    np.testing.assert_allclose(denormalize_sinr(normalize_sinr(inside)), inside, atol=1e-6)
    with pytest.raises(DegenerateRange):
        normalize_sinr(values, 5.0, 5.0)
    with pytest.raises(DegenerateRange):
        denormalize_sinr(values, 5.0, -5.0)


def test_resize_nearest_replicates_blocks(rng):
    t = rng.uniform(size=(8, 8))
    up = resize(t, 16, mode="nearest")
    np.testing.assert_array_equal(up, np.kron(t, np.ones((2, 2))))


def test_resize_bilinear_keeps_corners_and_constants(rng):
    t = rng.uniform(size=(16, 16))
    down = resize(t, 8)
    assert down.shape == (8, 8)
    assert down[0, 0] == pytest.approx(t[0, 0])
    assert down[-1, -1] == pytest.approx(t[-1, -1])
    np.testing.assert_allclose(resize(np.full((9, 9), 4.0), 12), 4.0)


def test_resize_rejects_small_targets():
    with pytest.raises(InvalidResolution):
        resize(np.zeros((8, 8)), 4)


@pytest.mark.parametrize(
    "x, y, expected",
    [
        (45, 45, "I"),
        (15, 45, "II"),
        (15, 15, "III"),
        (45, 15, "IV"),
        (30, 30, "I"),
        (29.9, 30, "II"),
    ],
)
def test_quadrants(x, y, expected):
    assert quadrant_of(x, y, 60.0, 60.0) == expected
