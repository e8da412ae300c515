import numpy as np
import pytest

from warehouse_sinr.oracle.raytrace import crossing_counts, ray_crossings, traverse_cells
from warehouse_sinr.scene.geometry import GridSpec, PermittivityGrid
from warehouse_sinr.scene.materials import DEFAULT_MATERIALS

N = 16
MATERIALS = DEFAULT_MATERIALS[:2]


def _grid(index):
    return PermittivityGrid(
        index=np.asarray(index, dtype=np.int16),
        materials=MATERIALS,
        geometry=GridSpec(float(N), float(N), N, N),
    )


def _vertex_clearance(a, b):
    """Smallest distance from an interior grid vertex to the segment a-b, in cells."""
    ks = np.arange(1, N, dtype=np.float64)
    vx, vy = np.meshgrid(ks, ks)
    d = np.asarray(b) - np.asarray(a)
    t = ((vx - a[0]) * d[0] + (vy - a[1]) * d[1]) / float(d @ d)
    t = np.clip(t, 0.0, 1.0)
    return float(np.hypot(a[0] + t * d[0] - vx, a[1] + t * d[1] - vy).min())


def _dense_runs(grid, a, b, per_cell=20):
    length = float(np.hypot(b[0] - a[0], b[1] - a[1]))
    n = int(np.ceil(length * per_cell)) + 1
    t = np.linspace(0.0, 1.0, n + 1)
    xs = a[0] + t * (b[0] - a[0])
    ys = a[1] + t * (b[1] - a[1])
    cols = np.clip(np.floor(xs).astype(int), 0, N - 1)
    rows = np.clip(np.floor(ys).astype(int), 0, N - 1)
    counts = np.zeros(len(MATERIALS) + 1, dtype=int)
    previous = 0
    for code in grid.index[rows, cols]:
        if code != 0 and code != previous:
            counts[code] += 1
        previous = code
    return counts


def _as_counts(crossings):
    counts = np.zeros(len(MATERIALS) + 1, dtype=int)
    for material, n in crossings:
        counts[MATERIALS.index(material) + 1] = n
    return counts


def test_matches_dense_sampling_on_random_grids():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 200:
        index = rng.choice(3, size=(N, N), p=[0.6, 0.2, 0.2])
        grid = _grid(index)
        a, b = rng.uniform(0.0, N, size=2), rng.uniform(0.0, N, size=2)
        # a sampling step of 1/20 cell only resolves rays that keep clear of grid vertices
        if _vertex_clearance(a, b) < 0.03:
            continue
        expected = _dense_runs(grid, a, b)
        assert np.array_equal(_as_counts(ray_crossings(grid, a, b)), expected)
        vectorized = crossing_counts(grid, tuple(a), b[None])[0]
        assert np.array_equal(vectorized, expected)
        checked += 1


def test_vectorized_matches_walk_for_many_targets():
    rng = np.random.default_rng(1)
    index = rng.choice(3, size=(N, N), p=[0.5, 0.25, 0.25])
    grid = _grid(index)
    source = (7.3, 4.6)
    targets = rng.uniform(0.0, N, size=(300, 2))
    for skip in (False, True):
        counts = crossing_counts(grid, source, targets, skip_source_run=skip)
        for target, row in zip(targets, counts):
            walked = _as_counts(ray_crossings(grid, source, tuple(target), skip_source_run=skip))
            assert np.array_equal(row, walked)


def test_traverse_horizontal():
    grid = _grid(np.zeros((N, N)))
    cells = traverse_cells(grid, (0.5, 2.5), (4.5, 2.5))
    assert cells == [(2, 0), (2, 1), (2, 2), (2, 3), (2, 4)]


def test_traverse_diagonal_through_vertices():
    grid = _grid(np.zeros((N, N)))
    cells = traverse_cells(grid, (0.5, 0.5), (3.5, 3.5))
    assert cells == [(0, 0), (1, 1), (2, 2), (3, 3)]


def test_traverse_zero_length():
    grid = _grid(np.zeros((N, N)))
    assert traverse_cells(grid, (2.5, 2.5), (2.5, 2.5)) == []


def test_consecutive_cells_form_one_run():
    index = np.zeros((N, N))
    index[0, 1:3] = 1
    index[0, 4] = 1
    index[0, 5] = 2
    grid = _grid(index)
    crossings = ray_crossings(grid, (0.5, 0.5), (10.5, 0.5))
    assert _as_counts(crossings).tolist() == [0, 2, 1]


def test_skip_source_run():
    index = np.zeros((N, N))
    index[0, 0:3] = 1
    grid = _grid(index)
    assert _as_counts(ray_crossings(grid, (0.5, 0.5), (10.5, 0.5))).tolist() == [0, 1, 0]
    skipped = ray_crossings(grid, (0.5, 0.5), (10.5, 0.5), skip_source_run=True)
    assert skipped == []
    counts = crossing_counts(grid, (0.5, 0.5), np.array([[10.5, 0.5]]), skip_source_run=True)
    assert counts.sum() == 0


@pytest.mark.parametrize("target", [(10.5, 0.5), (0.5, 10.5), (9.2, 7.7)])
def test_air_is_line_of_sight(target):
    grid = _grid(np.zeros((N, N)))
    assert ray_crossings(grid, (0.5, 0.5), target) == []
    assert crossing_counts(grid, (0.5, 0.5), np.array([target])).sum() == 0


@pytest.mark.filterwarnings("error")
def test_axis_aligned_rays_stay_quiet():
    index = np.zeros((N, N))
    index[3, 5:8] = 1
    grid = _grid(index)
    targets = np.array([[12.5, 3.5], [0.5, 3.5], [2.5, 12.5], [2.5, 0.5]])
    counts = crossing_counts(grid, (2.5, 3.5), targets)
    assert counts.tolist() == [[0, 1, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0]]
