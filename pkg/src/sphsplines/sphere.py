"""Directions on the unit 2-sphere, lattices, distances, and patch geometry.

Directions are plain numpy arrays of shape ``(3,)`` (or ``(N, 3)`` for
collections), kept on the unit sphere to 1e-12 by the constructors in this
module.  The chord distance ``sqrt(2 - 2*<r,s>)`` is the Euclidean distance in
R^3 restricted to the sphere, which lets neighbour queries use standard
kd-trees.
"""

import numpy as np
from scipy.spatial import cKDTree

SPHERE_AREA = 4.0 * np.pi

# chord separation below which two knots count as duplicates (Gram matrices
# need distinct knots)
DISTINCT_KNOT_TOL = 1e-10


def direction_from_lonlat(lon_deg, lat_deg):
    """Unit direction(s) from longitude/latitude in degrees.

    Convention: x-axis at (lon, lat) = (0, 0), z-axis at the north pole.

    Parameters
    ----------
    lon_deg, lat_deg : float or array_like
        Longitude (any real, wraps) and latitude in [-90, 90] degrees.

    Returns
    -------
    ndarray
        Shape ``(3,)`` for scalar input, else ``(..., 3)``.
    """
    lon = np.deg2rad(np.asarray(lon_deg, dtype=float))
    lat = np.deg2rad(np.asarray(lat_deg, dtype=float))
    if np.any(np.abs(lat) > np.pi / 2 + 1e-12):
        raise ValueError("latitude out of range [-90, 90]")
    out = np.stack(
        [np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)],
        axis=-1,
    )
    return out


def lonlat_from_direction(points):
    """Inverse of `direction_from_lonlat`; returns (lon_deg, lat_deg)."""
    p = np.asarray(points, dtype=float)
    lat = np.rad2deg(np.arcsin(np.clip(p[..., 2], -1.0, 1.0)))
    lon = np.rad2deg(np.arctan2(p[..., 1], p[..., 0]))
    return lon, lat


def chord_distance(r, s):
    """Chord distance sqrt(2 - 2*<r,s>), clamped to [0, 2].

    Broadcasts over leading axes; ``r`` and ``s`` are unit directions.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    inner = np.sum(r * s, axis=-1)
    return np.sqrt(np.clip(2.0 - 2.0 * inner, 0.0, 4.0))


class KnotSet:
    """An ordered set of pairwise-distinct unit directions.

    Parameters
    ----------
    points : (N, 3) array_like
        Unit directions.  Validated to unit norm (1e-12) and pairwise
        distinctness (minimum pairwise chord > 1e-10).
    nodal_width_estimate : float, optional
        Cached estimate of the covering radius (chord units), if known.
    """

    def __init__(self, points, nodal_width_estimate=None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must have shape (N, 3)")
        if pts.shape[0] == 0:
            raise ValueError("empty knot set")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("knots must be unit vectors (|norm - 1| <= 1e-12)")
        if pts.shape[0] > 1:
            # kd-tree nearest-neighbour: chord distance == 3-d Euclidean
            dist, _ = cKDTree(pts).query(pts, k=2)
            if dist[:, 1].min() <= DISTINCT_KNOT_TOL:
                raise ValueError("duplicate knots (pairwise chord <= 1e-10)")
        self.points = pts
        self.points.setflags(write=False)
        self.nodal_width_estimate = nodal_width_estimate

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return "KnotSet(%d points)" % len(self)


def fibonacci_lattice(N):
    """Quasi-uniform Fibonacci lattice of N points.

    Points are phi_n = 2*pi*n*(1 - 2/(1+sqrt(5))), theta_n = arccos(1 - 2n/N)
    for n = 1..N, so the last point sits exactly on the south pole and no
    point sits on the north pole.  Covering radius scales like 2.728/sqrt(N).

    Parameters
    ----------
    N : int
        Number of points, >= 1.

    Returns
    -------
    KnotSet
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(1, N + 1, dtype=float)
    phi = 2.0 * np.pi * n * (1.0 - 2.0 / (1.0 + np.sqrt(5.0)))
    cos_theta = 1.0 - 2.0 * n / N
    sin_theta = np.sqrt(np.clip(1.0 - cos_theta**2, 0.0, 1.0))
    pts = np.stack(
        [np.cos(phi) * sin_theta, np.sin(phi) * sin_theta, cos_theta], axis=1
    )
    # renormalise to keep the unit-norm invariant at 1e-12 despite rounding
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    return KnotSet(pts, nodal_width_estimate=2.728 / np.sqrt(N))


def nodal_width(knots, probe_resolution=None):
    """Brute-force covering-radius estimate of a knot set.

    Probes a dense Fibonacci lattice and returns the largest
    nearest-knot chord distance found.  This is a lower bound on the true
    covering radius that tightens as ``probe_resolution`` grows.

    Parameters
    ----------
    knots : KnotSet
    probe_resolution : int, optional
        Number of probe points, default ``100 * len(knots)``.

    Returns
    -------
    float
    """
    if not isinstance(knots, KnotSet):
        knots = KnotSet(knots)
    N = len(knots)
    if probe_resolution is None:
        probe_resolution = 100 * N
    probe_resolution = int(probe_resolution)
    if probe_resolution < 1:
        raise ValueError("probe_resolution must be positive")
    probes = fibonacci_lattice(probe_resolution).points
    dist, _ = cKDTree(knots.points).query(probes, k=1)
    return float(dist.max())


class PatchBounds:
    """A longitude/latitude rectangle on the sphere, bounds in degrees.

    Area is exact in the (lon, sin lat) parametrisation:
    ``dlon_rad * (sin lat_max - sin lat_min)``.
    """

    def __init__(self, lon_min, lon_max, lat_min, lat_max):
        lon_min, lon_max = float(lon_min), float(lon_max)
        lat_min, lat_max = float(lat_min), float(lat_max)
        if not (lon_min < lon_max <= lon_min + 360.0):
            raise ValueError("need lon_min < lon_max <= lon_min + 360")
        if not (-90.0 <= lat_min < lat_max <= 90.0):
            raise ValueError("need -90 <= lat_min < lat_max <= 90")
        self.lon_min, self.lon_max = lon_min, lon_max
        self.lat_min, self.lat_max = lat_min, lat_max

    @property
    def area(self):
        """Spherical area of the patch."""
        dlon = np.deg2rad(self.lon_max - self.lon_min)
        return dlon * (
            np.sin(np.deg2rad(self.lat_max)) - np.sin(np.deg2rad(self.lat_min))
        )

    @property
    def center(self):
        """Unit direction at the patch midpoint in (lon, lat)."""
        return direction_from_lonlat(
            0.5 * (self.lon_min + self.lon_max),
            0.5 * (self.lat_min + self.lat_max),
        )

    def angular_radius_bound(self):
        """Upper bound (radians) on the great-circle radius about `center`.

        Walk meridian then parallel: half the latitude span plus half the
        longitude span (parallel arc length <= dlon).
        """
        return 0.5 * np.deg2rad(self.lat_max - self.lat_min) + 0.5 * np.deg2rad(
            self.lon_max - self.lon_min
        )

    def __repr__(self):
        return "PatchBounds(lon=[%g, %g], lat=[%g, %g])" % (
            self.lon_min,
            self.lon_max,
            self.lat_min,
            self.lat_max,
        )


def equal_angle_patch_grid(n_lat, n_lon):
    """Tile the sphere with an equal-angle grid of patches.

    Parameters
    ----------
    n_lat, n_lon : int
        Number of latitude rows and longitude columns, both >= 1.

    Returns
    -------
    list of PatchBounds
        ``n_lat * n_lon`` non-overlapping patches covering
        [-180, 180] x [-90, 90], row-major from the south.
    """
    n_lat, n_lon = int(n_lat), int(n_lon)
    if n_lat < 1 or n_lon < 1:
        raise ValueError("n_lat and n_lon must be >= 1")
    lat_edges = np.linspace(-90.0, 90.0, n_lat + 1)
    lon_edges = np.linspace(-180.0, 180.0, n_lon + 1)
    return [
        PatchBounds(lon_edges[j], lon_edges[j + 1], lat_edges[i], lat_edges[i + 1])
        for i in range(n_lat)
        for j in range(n_lon)
    ]
