"""Spherical spline fields: synthesis, fast evaluation, and norms.

A field is a finite kernel expansion ``f(r) = sum_n x_n psi(<r, r_n>)`` over
lattice knots.  Evaluation visits only in-support knots for compactly
supported kernels (ball queries in the chord metric); the naive full sum is
the correctness oracle.
"""

import math
from collections import namedtuple

import numpy as np
from scipy.spatial import cKDTree

from .sphere import KnotSet


class SplineField:
    """Immutable kernel expansion over a knot set.

    Parameters
    ----------
    kernel : ZonalKernel
    knots : KnotSet
    coeffs : (N,) real array, finite
    """

    def __init__(self, kernel, knots, coeffs):
        if not isinstance(knots, KnotSet):
            knots = KnotSet(knots)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size != len(knots):
            raise ValueError(
                "need one coefficient per knot (got %d for %d knots)"
                % (coeffs.size, len(knots))
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        self.kernel = kernel
        self.knots = knots
        self.coeffs = coeffs
        self._tree = None

    def __call__(self, targets):
        return evaluate(self, targets)

    def __repr__(self):
        return "SplineField(%r, %d knots)" % (self.kernel, len(self.knots))


def synthesize(kernel, knots, coeffs):
    """Bundle (kernel, knots, coeffs) into a field; no computation."""
    return SplineField(kernel, knots, coeffs)


def evaluate(field, targets, chunk=4096):
    """Field values sum_n x_n psi(<r, r_n>) at unit target directions.

    Parameters
    ----------
    field : SplineField
    targets : (M, 3) or (3,) array of unit directions
    chunk : int
        Dense-path block size over targets (bounds the temporary M x N
        kernel-argument matrix).

    Returns
    -------
    (M,) values, or a scalar for a single (3,) target
    """
    t_in = np.asarray(targets, dtype=float)
    single = t_in.ndim == 1
    pts = np.atleast_2d(t_in)
    kernel, knots, coeffs = field.kernel, field.knots.points, field.coeffs
    M = pts.shape[0]
    out = np.zeros(M)
    if kernel.support_tmin is not None:
        radius = math.sqrt(max(2.0 - 2.0 * kernel.support_tmin, 0.0))
        if field._tree is None:
            field._tree = cKDTree(knots)
        hits = field._tree.query_ball_point(pts, radius)
        counts = np.fromiter((len(h) for h in hits), dtype=np.intp, count=M)
        if counts.sum() > 0:
            flat = np.concatenate([np.asarray(h, dtype=np.intp) for h in hits])
            rep = np.repeat(np.arange(M), counts)
            t = np.sum(pts[rep] * knots[flat], axis=1)
            vals = kernel(np.clip(t, -1.0, 1.0)) * coeffs[flat]
            out = np.bincount(rep, weights=vals, minlength=M)
    else:
        for lo in range(0, M, int(chunk)):
            block = pts[lo : lo + int(chunk)]
            t = np.clip(block @ knots.T, -1.0, 1.0)
            out[lo : lo + int(chunk)] = kernel(t) @ coeffs
    return float(out[0]) if single else out


def gtv_norm(field):
    """The regulariser's value on the field: ||coeffs||_1."""
    return float(np.abs(field.coeffs).sum())


def native_norm(field, K):
    """sqrt(c^T K c) with K the knot Gram matrix of the field's kernel.

    Raises
    ------
    ValueError
        Clearly negative quadratic form (K was not positive definite).
    """
    c = field.coeffs
    q = float(c @ (np.asarray(K, dtype=float) @ c))
    scale = max(1.0, float(np.abs(K).max()) * float(c @ c))
    if q < -1e-12 * scale:
        raise ValueError("negative quadratic form: Gram matrix not positive definite")
    return math.sqrt(max(q, 0.0))


SparsityReport = namedtuple("SparsityReport", ["count", "indices"])


def sparsity_report(field, rel_threshold=1e-4):
    """Count coefficients above ``rel_threshold * max|coeff|``."""
    if not 0.0 < rel_threshold < 1.0:
        raise ValueError("rel_threshold must be in (0, 1)")
    mag = np.abs(field.coeffs)
    peak = mag.max() if mag.size else 0.0
    if peak == 0.0:
        return SparsityReport(0, [])
    idx = np.nonzero(mag > rel_threshold * peak)[0]
    return SparsityReport(int(idx.size), idx.tolist())
