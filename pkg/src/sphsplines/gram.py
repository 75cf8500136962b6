"""Sampling functionals and sparse system-matrix assembly.

A measurement couples the unknown field to the spline expansion through the
rows ``G[l, n] = (functional l applied to psi(<., r_n>))``: point samples
evaluate the kernel directly, patch functionals integrate it over a lon/lat
rectangle.  Compactly supported kernels make ``G`` sparse, and a chord-metric
ball query skips the exact zero region before any magnitude cutoff applies.
"""

import math

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .legendre import LegendreSeries, gauss_legendre, resynthesize
from .pdo import check_compatibility, sobolev_symbol
from .sphere import KnotSet, chord_distance


class DiracFunctional:
    """Point evaluation at a unit direction."""

    kind = "dirac"

    def __init__(self, direction):
        direction = np.asarray(direction, dtype=float).reshape(3)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-12:
            raise ValueError("sampling direction must be a unit vector")
        self.direction = direction

    def __repr__(self):
        return "DiracFunctional(%s)" % np.array_str(self.direction, precision=4)


class PatchFunctional:
    """Integral over a lon/lat rectangle (unnormalised: value = int_B f)."""

    kind = "square_integrable"

    def __init__(self, bounds, quadrature_order=8):
        quadrature_order = int(quadrature_order)
        if quadrature_order < 2:
            raise ValueError("patch quadrature order must be >= 2")
        self.bounds = bounds
        self.quadrature_order = quadrature_order

    def __repr__(self):
        return "PatchFunctional(%r, Q=%d)" % (self.bounds, self.quadrature_order)


class GramMatrix:
    """Immutable sparse system matrix with a spectral-norm cache.

    Parameters
    ----------
    matrix : scipy sparse or dense array, shape (L, N)
        One row per sampling functional, one column per knot.  Entries must
        be finite; column indices are kept sorted within each row.
    """

    def __init__(self, matrix):
        csr = sparse.csr_matrix(matrix)
        csr.sort_indices()
        if csr.nnz and not np.all(np.isfinite(csr.data)):
            raise ValueError("Gram entries must be finite")
        self.matrix = csr
        self.shape = csr.shape
        self.spectral_norm_cache = None

    def matvec(self, x):
        return self.matrix @ x

    def rmatvec(self, y):
        return self.matrix.T @ y

    def toarray(self):
        return self.matrix.toarray()

    @property
    def nnz(self):
        return self.matrix.nnz

    @property
    def density(self):
        return self.matrix.nnz / (self.shape[0] * self.shape[1])

    def __repr__(self):
        return "GramMatrix(%d x %d, %d nonzero)" % (
            self.shape[0], self.shape[1], self.nnz,
        )


def _support_chord_radius(kernel):
    # psi(t) = 0 exactly for t <= support_tmin, i.e. chord >= this radius
    if kernel.support_tmin is None:
        return None
    return math.sqrt(max(2.0 - 2.0 * kernel.support_tmin, 0.0))


def dirac_row(kernel, p, knots, abs_cutoff=1e-12, tree=None):
    """One Gram row for a point sample: entry n = psi(<p, r_n>).

    Parameters
    ----------
    kernel : ZonalKernel
    p : (3,) unit direction
    knots : KnotSet
    abs_cutoff : float
        Entries with ``|value| <= abs_cutoff`` are omitted.  For compactly
        supported kernels the exact zero region is skipped regardless.
    tree : scipy.spatial.cKDTree, optional
        Prebuilt tree over the knot points (assembly plumbing).

    Returns
    -------
    (indices, values)
        Column indices (ascending) and the corresponding entries.
    """
    if abs_cutoff < 0:
        raise ValueError("abs_cutoff must be >= 0")
    p = np.asarray(p, dtype=float).reshape(3)
    pts = knots.points
    radius = _support_chord_radius(kernel)
    if radius is not None:
        if tree is not None and radius < 2.0:
            cand = np.asarray(sorted(tree.query_ball_point(p, radius)), dtype=np.intp)
        else:
            cand = np.nonzero(pts @ p > kernel.support_tmin)[0]
        t = pts[cand] @ p
        inside = t > kernel.support_tmin
        cand, t = cand[inside], t[inside]
    else:
        cand = np.arange(len(pts))
        t = pts @ p
    vals = np.asarray(kernel(t), dtype=float).reshape(cand.shape)
    keep = np.abs(vals) > abs_cutoff
    return cand[keep], vals[keep]


def patch_row(kernel, b, knots, Q=8, tree=None):
    """One Gram row for a patch functional: entry n = int_B psi(<r, r_n>) dr.

    The integral runs over the rectangle ``b`` in the (lon, u = sin lat)
    parametrisation, where the area element is exactly ``du dlon``; a Q x Q
    tensor Gauss rule therefore integrates constant kernels exactly.  Knots
    whose support ball misses the patch entirely give exact zeros and are
    omitted.
    """
    Q = int(Q)
    if Q < 2:
        raise ValueError("patch quadrature order must be >= 2")
    pts = knots.points
    radius = _support_chord_radius(kernel)
    if radius is not None:
        # chord from patch centre to any patch point <= 2 sin(alpha/2)
        alpha = min(b.angular_radius_bound(), math.pi)
        reach = 2.0 * math.sin(0.5 * alpha) + radius
        if reach < 2.0:
            if tree is not None:
                cand = np.asarray(
                    sorted(tree.query_ball_point(b.center, reach)), dtype=np.intp
                )
            else:
                cand = np.nonzero(chord_distance(pts, b.center) <= reach)[0]
        else:
            cand = np.arange(len(pts))
    else:
        cand = np.arange(len(pts))
    if cand.size == 0:
        return cand, np.empty(0)
    rule = gauss_legendre(Q)
    lon, w_lon = rule.mapped(math.radians(b.lon_min), math.radians(b.lon_max))
    u, w_u = rule.mapped(
        math.sin(math.radians(b.lat_min)), math.sin(math.radians(b.lat_max))
    )
    lon_grid, u_grid = np.meshgrid(lon, u, indexing="ij")
    rho = np.sqrt(np.clip(1.0 - u_grid**2, 0.0, None))
    dirs = np.stack(
        [rho * np.cos(lon_grid), rho * np.sin(lon_grid), u_grid], axis=-1
    ).reshape(-1, 3)
    w = np.outer(w_lon, w_u).reshape(-1)
    vals = w @ np.asarray(kernel(dirs @ pts[cand].T), dtype=float)
    keep = vals != 0.0
    return cand[keep], vals[keep]


def assemble_gram(kernel, functionals, knots, abs_cutoff=1e-12):
    """Assemble the L x N system matrix, one row per sampling functional.

    Rows are built independently, so any schedule gives the same matrix.
    The kernel must be smooth enough for the functional kinds present:
    point sampling needs coefficient decay faster than degree^-(d-1),
    patch sampling faster than degree^-((d-1)/2).  Kernels of unknown
    smoothness (``beta=None``) skip the check and the caller vouches.

    Raises
    ------
    ValueError
        If ``functionals`` is empty or the kernel is too rough for a
        functional kind present.
    """
    functionals = list(functionals)
    if not functionals:
        raise ValueError("need at least one sampling functional")
    if abs_cutoff < 0:
        raise ValueError("abs_cutoff must be >= 0")
    if kernel.beta is not None:
        sym = sobolev_symbol(kernel.beta)
        for kind in sorted({f.kind for f in functionals}):
            if not check_compatibility(sym, kind):
                threshold = sym.dim - 1 if kind == "dirac" else (sym.dim - 1) / 2.0
                raise ValueError(
                    "kernel coefficient decay order %g is too small for %s "
                    "sampling (needs > %g)" % (2.0 * kernel.beta, kind, threshold)
                )
    tree = cKDTree(knots.points) if kernel.support_tmin is not None else None
    indptr = [0]
    indices = []
    data = []
    for f in functionals:
        if isinstance(f, DiracFunctional):
            idx, vals = dirac_row(kernel, f.direction, knots, abs_cutoff, tree=tree)
        elif isinstance(f, PatchFunctional):
            idx, vals = patch_row(
                kernel, f.bounds, knots, f.quadrature_order, tree=tree
            )
            keep = np.abs(vals) > abs_cutoff
            idx, vals = idx[keep], vals[keep]
        else:
            raise TypeError("unknown sampling functional: %r" % (f,))
        indices.append(idx)
        data.append(vals)
        indptr.append(indptr[-1] + idx.size)
    csr = sparse.csr_matrix(
        (
            np.concatenate(data) if data else np.empty(0),
            np.concatenate(indices) if indices else np.empty(0, dtype=np.intp),
            np.asarray(indptr, dtype=np.intp),
        ),
        shape=(len(functionals), len(knots)),
    )
    return GramMatrix(csr)


def spectral_norm(G, tol=1e-10, max_iter=5000):
    """Largest singular value by power iteration on G^T G.

    Starts from a fixed-seed random vector so repeated calls agree bit for
    bit; iterates until the Rayleigh quotient's relative change drops below
    ``tol``.  The result is cached on the GramMatrix.

    Raises
    ------
    ValueError
        All-zero matrix.
    RuntimeError
        No convergence within ``max_iter`` iterations.
    """
    if isinstance(G, GramMatrix):
        if G.spectral_norm_cache is not None:
            return G.spectral_norm_cache
        A = G.matrix
    else:
        A = sparse.csr_matrix(np.atleast_2d(np.asarray(G, dtype=float)))
    if A.nnz == 0:
        raise ValueError("spectral norm of an all-zero matrix")
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    s2_prev = -1.0
    s2 = 0.0
    for _ in range(int(max_iter)):
        w = A @ v
        s2 = float(w @ w)  # Rayleigh quotient of A^T A at the unit vector v
        if s2 == 0.0:
            # started in the nullspace; re-seed deterministically
            v = rng.standard_normal(A.shape[1])
            v /= np.linalg.norm(v)
            continue
        if s2_prev >= 0.0 and abs(s2 - s2_prev) <= tol * s2:
            break
        s2_prev = s2
        v = A.T @ w
        v /= np.linalg.norm(v)
    else:
        raise RuntimeError(
            "power iteration did not converge within %d iterations" % max_iter
        )
    sigma = math.sqrt(s2)
    if isinstance(G, GramMatrix):
        G.spectral_norm_cache = sigma
    return sigma


def knot_gram(kernel, knots):
    """Dense symmetric kernel matrix K[m, n] = psi(<r_m, r_n>) on the knots.

    Accepts a ZonalKernel or a LegendreSeries (e.g. a self-convolved kernel,
    evaluated by resynthesis).  Strict positive definiteness of the zonal
    family makes K positive definite for pairwise-distinct knots, which the
    KnotSet constructor enforces.
    """
    if not isinstance(knots, KnotSet):
        knots = KnotSet(knots)
    if isinstance(kernel, LegendreSeries):
        series = kernel
        def fn(t):
            return resynthesize(series, t)
    else:
        fn = kernel
    t = np.clip(knots.points @ knots.points.T, -1.0, 1.0)
    K = np.asarray(fn(t), dtype=float)
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, float(fn(1.0)))
    return K
