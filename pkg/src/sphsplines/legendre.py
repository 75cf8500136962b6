"""Legendre polynomials, eigenspace multiplicities, quadrature, and the
Fourier-Legendre transform of zonal kernels.

The transform convention is fixed so that for a zonal kernel psi on the
2-sphere,

    psi_hat[n] = 2*pi * int_{-1}^{1} psi(t) P_n(t) dt,

and resynthesis ``sum_n (2n+1)/(4*pi) * psi_hat[n] * P_n(t)`` reproduces psi.
These are exactly the Funk-Hecke eigenvalues of the associated convolution
operator, so spherical self-convolution squares the coefficients.
"""

import math

import numpy as np


def multiplicity(d, n):
    """Dimension of the degree-n spherical harmonic eigenspace on S^{d-1}.

    ``N_d(0) = 1`` and ``N_d(n) = ((2n+d-2)/n) * C(n+d-3, n-1)`` for n >= 1;
    reduces to ``2n+1`` at d = 3 and to 2 at d = 2.
    """
    d, n = int(d), int(n)
    if d < 2:
        raise ValueError("d must be >= 2")
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1
    return (2 * n + d - 2) * math.comb(n + d - 3, n - 1) // n


def legendre_all(N_max, t):
    """Legendre polynomials P_0(t) .. P_{N_max}(t) by the three-term recurrence.

    Parameters
    ----------
    N_max : int
    t : float or array_like in [-1, 1]

    Returns
    -------
    ndarray
        Shape ``(N_max + 1,) + shape(t)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + 1e-14):
        raise ValueError("|t| must be <= 1")
    N_max = int(N_max)
    P = np.empty((N_max + 1,) + t.shape)
    P[0] = 1.0
    if N_max >= 1:
        P[1] = t
    for n in range(1, N_max):
        P[n + 1] = ((2 * n + 1) * t * P[n] - n * P[n - 1]) / (n + 1)
    return P


class QuadratureRule:
    """Nodes/weights pair on (-1, 1); weights sum to 2."""

    def __init__(self, nodes, weights):
        nodes = np.asarray(nodes, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        self.nodes = nodes
        self.weights = weights

    def mapped(self, a, b):
        """Affinely mapped copy of the rule onto [a, b]."""
        half = 0.5 * (b - a)
        return self.nodes * half + 0.5 * (a + b), self.weights * half


def gauss_legendre(Q):
    """Gauss-Legendre rule with Q nodes (exact through degree 2Q-1)."""
    Q = int(Q)
    if Q < 1:
        raise ValueError("Q must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(Q)
    return QuadratureRule(nodes, weights)


class LegendreSeries:
    """Fourier-Legendre coefficients psi_hat[0..N_max] of a zonal kernel."""

    def __init__(self, coeffs, dim=3):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coeffs must be a nonempty 1-d array")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        if int(dim) != 3:
            raise ValueError("only d = 3 supported at runtime")
        self.coeffs = coeffs
        self.dim = 3

    @property
    def n_max(self):
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size


def fourier_legendre(kernel, N_max=512, Q=600):
    """Fourier-Legendre coefficients of a zonal kernel.

    ``psi_hat[n] = 2*pi * int psi(t) P_n(t) dt`` computed with Q-node
    Gauss-Legendre quadrature.  For compactly supported kernels the integral
    is split at the support boundary and each piece gets its own Q-node rule
    (Gauss rules lose accuracy across the kink).

    Parameters
    ----------
    kernel : callable or ZonalKernel
        Evaluates psi(t) on [-1, 1]; if it carries a ``support_tmin``
        attribute the split rule is used.
    N_max : int
        Highest retained degree; must satisfy ``N_max < 2Q - 1`` or the
        quadrature aliases high modes.
    Q : int

    Returns
    -------
    LegendreSeries
    """
    N_max, Q = int(N_max), int(Q)
    if N_max >= 2 * Q - 1:
        raise ValueError("aliasing: need N_max < 2Q - 1 (got N_max=%d, Q=%d)" % (N_max, Q))
    support_tmin = getattr(kernel, "support_tmin", None)
    rule = gauss_legendre(Q)
    if support_tmin is not None and -1.0 < support_tmin < 1.0:
        pieces = [(-1.0, support_tmin), (support_tmin, 1.0)]
    else:
        pieces = [(-1.0, 1.0)]
    coeffs = np.zeros(N_max + 1)
    for a, b in pieces:
        x, w = rule.mapped(a, b)
        vals = np.asarray(kernel(x), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("kernel must be finite on [-1, 1]")
        coeffs += legendre_all(N_max, x) @ (w * vals)
    return LegendreSeries(2.0 * np.pi * coeffs)


def resynthesize(series, t):
    """Evaluate ``sum_n (2n+1)/(4*pi) * psi_hat[n] * P_n(t)``.

    Parameters
    ----------
    series : LegendreSeries
    t : float or array_like in [-1, 1]

    Returns
    -------
    float or ndarray matching the shape of ``t``
    """
    t_arr = np.asarray(t, dtype=float)
    P = legendre_all(series.n_max, t_arr)
    scale = (2.0 * np.arange(series.n_max + 1) + 1.0) / (4.0 * np.pi)
    out = np.tensordot(scale * series.coeffs, P, axes=(0, 0))
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out
