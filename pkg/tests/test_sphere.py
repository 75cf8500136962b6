import numpy as np
import pytest

from sphsplines.sphere import (
    SPHERE_AREA,
    KnotSet,
    PatchBounds,
    chord_distance,
    direction_from_lonlat,
    equal_angle_patch_grid,
    fibonacci_lattice,
    lonlat_from_direction,
    nodal_width,
)


def test_direction_axis_cases():
    np.testing.assert_allclose(direction_from_lonlat(0, 0), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(direction_from_lonlat(90, 0), [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(direction_from_lonlat(0, 90), [0, 0, 1], atol=1e-15)


def test_direction_unit_norm():
    rng = np.random.default_rng(0)
    lon = rng.uniform(-180, 180, size=200)
    lat = rng.uniform(-90, 90, size=200)
    d = direction_from_lonlat(lon, lat)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12)


def test_direction_lat_out_of_range():
    with pytest.raises(ValueError):
        direction_from_lonlat(0, 91)


def test_lonlat_roundtrip():
    rng = np.random.default_rng(1)
    lon = rng.uniform(-180, 180, size=50)
    lat = rng.uniform(-89.9, 89.9, size=50)
    lon2, lat2 = lonlat_from_direction(direction_from_lonlat(lon, lat))
    np.testing.assert_allclose(lon2, lon, atol=1e-10)
    np.testing.assert_allclose(lat2, lat, atol=1e-10)


def test_chord_distance_cases():
    r = np.array([0.0, 0.0, 1.0])
    assert chord_distance(r, r) == 0.0
    assert chord_distance(r, -r) == pytest.approx(2.0, abs=1e-15)
    s = np.array([1.0, 0.0, 0.0])
    assert chord_distance(r, s) == pytest.approx(np.sqrt(2.0), rel=1e-15)


def test_chord_distance_triangle_inequality():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, b, c = rng.normal(size=(3, 3))
        a, b, c = (v / np.linalg.norm(v) for v in (a, b, c))
        assert chord_distance(a, c) <= chord_distance(a, b) + chord_distance(b, c) + 1e-12


def test_fibonacci_endpoints():
    for N in (7, 100):
        pts = fibonacci_lattice(N).points
        np.testing.assert_allclose(pts[-1], [0, 0, -1], atol=1e-12)
    # even N: point n = N/2 sits on the equator
    pts = fibonacci_lattice(10).points
    assert pts[4][2] == pytest.approx(0.0, abs=1e-12)


def test_fibonacci_rejects_zero():
    with pytest.raises(ValueError):
        fibonacci_lattice(0)


@pytest.mark.parametrize("N", [10, 100, 1000])
def test_fibonacci_pairwise_distinct(N):
    # KnotSet construction enforces pairwise distinctness
    knots = fibonacci_lattice(N)
    assert len(knots) == N


def test_knotset_rejects_duplicates():
    with pytest.raises(ValueError):
        KnotSet([[0, 0, 1], [0, 0, 1]])


def test_knotset_rejects_non_unit():
    with pytest.raises(ValueError):
        KnotSet([[0, 0, 2.0]])


def test_nodal_width_single_knot():
    # probe lattice contains the exact south pole, so the antipode is hit
    knots = KnotSet([[0.0, 0.0, 1.0]])
    assert nodal_width(knots, 2000) == pytest.approx(2.0, abs=1e-9)


def test_nodal_width_antipodal_pair():
    knots = KnotSet([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    # max-min is attained on the equator at sqrt(2); probe estimate is a
    # lower bound converging quadratically in probe spacing
    w = nodal_width(knots, 20000)
    assert w <= np.sqrt(2.0) + 1e-12
    assert w == pytest.approx(np.sqrt(2.0), abs=1e-2)


def test_nodal_width_fibonacci_1000():
    w = nodal_width(fibonacci_lattice(1000), 100000)
    assert w == pytest.approx(2.728 / np.sqrt(1000), rel=0.10)


def test_nodal_width_monotone_in_N():
    widths = [nodal_width(fibonacci_lattice(N)) for N in (50, 200, 800)]
    assert widths[0] >= widths[1] >= widths[2]


def test_nodal_width_empty_rejected():
    with pytest.raises(ValueError):
        nodal_width(np.zeros((0, 3)))


def test_patch_grid_counts():
    assert len(equal_angle_patch_grid(1, 1)) == 1
    grid = equal_angle_patch_grid(2, 2)
    assert len(grid) == 4
    for b in grid:
        assert b.lon_max - b.lon_min == pytest.approx(180.0)
        assert b.lat_max - b.lat_min == pytest.approx(90.0)
    grid = equal_angle_patch_grid(120, 240)
    assert len(grid) == 28800
    assert grid[0].lon_max - grid[0].lon_min == pytest.approx(1.5)
    assert grid[0].lat_max - grid[0].lat_min == pytest.approx(1.5)


@pytest.mark.parametrize("n_lat,n_lon", [(1, 1), (3, 5), (17, 9)])
def test_patch_areas_sum_to_sphere(n_lat, n_lon):
    total = sum(b.area for b in equal_angle_patch_grid(n_lat, n_lon))
    assert total == pytest.approx(SPHERE_AREA, abs=1e-9)


def test_patch_grid_rejects_zero():
    with pytest.raises(ValueError):
        equal_angle_patch_grid(0, 4)


def test_patch_bounds_validation():
    with pytest.raises(ValueError):
        PatchBounds(10, 10, 0, 1)
    with pytest.raises(ValueError):
        PatchBounds(0, 1, -91, 0)
    with pytest.raises(ValueError):
        PatchBounds(0, 400, 0, 1)
