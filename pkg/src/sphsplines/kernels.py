"""Zonal Green kernels: closed-form Matérn and Wendland families, series-backed
Sobolev kernels, spherical self-convolution, and Lipschitz estimation.

All named constructors peak-normalise to ``psi(1) = 1``; global prefactors of
the underlying operator calculus only rescale coefficients and the
regularisation weight, so one convention is fixed.  Kernels are evaluated as
functions of ``t = <r, s>`` with the chord substitution ``c = sqrt(2 - 2t)``.
"""

import math
from fractions import Fraction

import numpy as np

from .legendre import LegendreSeries, fourier_legendre, resynthesize
from .pdo import green_series, sobolev_symbol


class ZonalKernel:
    """A zonal function of t = <r, s> on [-1, 1] with support metadata.

    Parameters
    ----------
    eval_fn : callable
        Vectorised map t -> psi(t).
    family : str
        One of 'matern', 'wendland', 'sobolev_series', 'custom_series'.
    beta : float or None
        Smoothness order of the matching operator (coefficients decay like
        (1 + eps*n)^(-2*beta)).
    epsilon : float or None
        Chord-scale parameter in (0, 1] for the scaled families.
    support_tmin : float or None
        If set, psi(t) = 0 exactly for t <= support_tmin.

    Notes
    -----
    Named constructors guarantee ``psi(1) = 1``; kernels built from raw series
    via `from_series` (e.g. self-convolutions) keep their natural scale.
    Instances are immutable apart from internal caches (series, Lipschitz).
    """

    def __init__(self, eval_fn, family, beta=None, epsilon=None, support_tmin=None):
        self._eval = eval_fn
        self.family = family
        self.beta = beta
        self.epsilon = epsilon
        self.support_tmin = support_tmin
        self.lipschitz_sq = None
        self._series_cache = {}

    def __call__(self, t):
        t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
        out = np.asarray(self._eval(t))
        return float(out) if out.ndim == 0 else out

    def series(self, n_max=512, quad_order=600):
        """Fourier-Legendre coefficients, cached per (n_max, quad_order)."""
        key = (int(n_max), int(quad_order))
        if key not in self._series_cache:
            self._series_cache[key] = fourier_legendre(self, *key)
        return self._series_cache[key]

    @classmethod
    def from_series(cls, series, family="custom_series", beta=None, epsilon=None,
                    normalize=False):
        """Kernel evaluated by resynthesis of a coefficient series."""
        coeffs = series.coeffs
        if normalize:
            peak = resynthesize(series, 1.0)
            if peak == 0:
                raise ValueError("cannot peak-normalise a kernel vanishing at t=1")
            coeffs = coeffs / peak
        s = LegendreSeries(coeffs)
        kern = cls(lambda t: resynthesize(s, t), family, beta=beta, epsilon=epsilon)
        kern._series_cache[(s.n_max, None)] = s
        return kern

    def __repr__(self):
        return "ZonalKernel(%s, beta=%s, eps=%s)" % (self.family, self.beta, self.epsilon)


def matern_halfinteger(p, r):
    """Half-integer Matérn function S_{p+1/2}(r), peak-normalised.

    ``S(r) = exp(-sqrt(2p+1) r) * (p!/(2p)!) *
    sum_i (p+i)!/(i!(p-i)!) (sqrt(8p+4) r)^{p-i}``; with u = sqrt(8p+4)*r
    this is exp(-u/2) times a degree-p polynomial in u whose coefficients are
    c_j = p!(2p-j)!/((2p)!(p-j)!j!).  S(0) = 1.

    Parameters
    ----------
    p : int >= 0
        Polynomial order; the smoothness index is nu = p + 1/2.
    r : float or array_like >= 0
    """
    p = int(p)
    if p < 0:
        raise ValueError("p must be >= 0")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be >= 0")
    coefs = [
        Fraction(math.factorial(p) * math.factorial(2 * p - j),
                 math.factorial(2 * p) * math.factorial(p - j) * math.factorial(j))
        for j in range(p + 1)
    ]
    u = np.sqrt(8.0 * p + 4.0) * r
    poly = np.zeros_like(u)
    for c in reversed(coefs):
        poly = poly * u + float(c)
    out = np.exp(-0.5 * u) * poly
    return float(out) if out.ndim == 0 else out


def matern_zonal(beta, epsilon, convention="standard"):
    """Matérn zonal kernel of smoothness order beta and chord scale epsilon.

    The operator order beta maps to the Matérn index nu = beta - 1 (d = 3),
    which must be a half-integer for the closed form.  ``standard`` evaluates
    the half-integer formula verbatim at c/epsilon (exponential rate
    sqrt(2 nu)/epsilon); ``eq60`` uses the unit-rate variant
    S_nu(c/(epsilon*sqrt(2 nu))), e.g. (1 + c/eps) exp(-c/eps) at beta = 2.5.
    Both are peak-normalised with no compact support.
    """
    beta = float(beta)
    epsilon = float(epsilon)
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    nu = beta - 1.0
    p = nu - 0.5
    if abs(p - round(p)) > 1e-12 or p < -1e-12:
        raise ValueError("beta - 1 must be a positive half-integer (got nu=%g)" % nu)
    p = int(round(p))
    scale = epsilon if convention == "standard" else None
    if convention == "eq60":
        scale = epsilon * math.sqrt(2.0 * nu)
    elif convention != "standard":
        raise ValueError("convention must be 'standard' or 'eq60'")

    def eval_fn(t):
        c = np.sqrt(np.clip(2.0 - 2.0 * t, 0.0, 4.0))
        return matern_halfinteger(p, c / scale)

    return ZonalKernel(eval_fn, "matern", beta=beta, epsilon=epsilon)


class WendlandPolynomial:
    """Piecewise polynomial phi_{d,k} on [0, 1] with exact rational coefficients.

    ``coeffs[j]`` is the Fraction coefficient of r**j; the function is 0 for
    r >= 1.  Normalised so phi(0) = 1; phi(1) = 0 exactly.
    """

    def __init__(self, coeffs, d, k, ell):
        self.coeffs = [Fraction(c) for c in coeffs]
        self.d = int(d)
        self.k = int(k)
        self.ell = int(ell)
        if self.coeffs[0] != 1:
            raise ValueError("polynomial must be normalised to 1 at r = 0")
        if sum(self.coeffs) != 0:
            raise ValueError("polynomial must vanish at r = 1")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for c in reversed(self.coeffs):
            out = out * r + float(c)
        out = np.where(r < 1.0, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def degree(self):
        return len(self.coeffs) - 1


def wendland_construct(d, k):
    """Wendland polynomial phi_{d,k} by exact integral-operator algebra.

    Starts from the truncated power phi_l(r) = (1-r)_+^l with
    l = floor(d/2) + k + 1 and applies ``(I phi)(r) = int_r^1 t phi(t) dt``
    k times using exact rational antidifferentiation, then normalises to 1
    at r = 0.  Yields a positive-definite kernel of smoothness 2k on R^d;
    e.g. (3,1) gives (1-r)^4 (1+4r).
    """
    d, k = int(d), int(k)
    if d < 1 or k < 0:
        raise ValueError("need d >= 1 and k >= 0")
    ell = d // 2 + k + 1
    # (1-r)^l expanded as ascending Fraction coefficients
    coeffs = [Fraction(math.comb(ell, j)) * (-1) ** j for j in range(ell + 1)]
    for _ in range(k):
        # t*phi(t) has coefficients shifted up one power; antiderivative A;
        # (I phi)(r) = A(1) - A(r)
        anti = [Fraction(0), Fraction(0)] + [c / (j + 2) for j, c in enumerate(coeffs)]
        total = sum(anti)
        coeffs = [total - anti[0]] + [-a for a in anti[1:]]
    peak = coeffs[0]
    coeffs = [c / peak for c in coeffs]
    return WendlandPolynomial(coeffs, d, k, ell)


def wendland_zonal(d, k, epsilon):
    """Compactly supported Wendland zonal kernel.

    ``psi(t) = phi_{d,k}(c/epsilon)`` with c = sqrt(2-2t); exactly zero for
    chords >= epsilon, i.e. t <= 1 - epsilon^2/2.  Matches operator
    smoothness beta = k + d/2.
    """
    epsilon = float(epsilon)
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    poly = wendland_construct(d, k)

    def eval_fn(t):
        c = np.sqrt(np.clip(2.0 - 2.0 * t, 0.0, 4.0))
        return poly(c / epsilon)

    return ZonalKernel(
        eval_fn,
        "wendland",
        beta=k + d / 2.0,
        epsilon=epsilon,
        support_tmin=1.0 - epsilon**2 / 2.0,
    )


def sobolev_green_zonal(beta, d=3, tol=1e-8):
    """Series-backed Green kernel of the Sobolev operator of order beta.

    No closed form exists; the kernel is the truncated coefficient series
    ``1/(1+n(n+1))^beta`` resynthesized and peak-normalised.  Requires
    beta > (d-1)/2 (growth order 2*beta must exceed d-1 for a continuous
    kernel).
    """
    beta = float(beta)
    if beta * 2.0 <= d - 1:
        raise ValueError("beta must exceed (d-1)/2 for a continuous Green kernel")
    series = green_series(sobolev_symbol(beta, d), tol=tol)
    kern = ZonalKernel.from_series(series, family="sobolev_series", beta=beta,
                                   normalize=True)
    return kern


def self_convolve(series):
    """Spherical self-convolution in coefficient space.

    The convolution operator of a zonal kernel is diagonalised by spherical
    harmonics with eigenvalues psi_hat[n] under this package's normalisation,
    so ``(psi * psi)^[n] = psi_hat[n]**2``.
    """
    return LegendreSeries(series.coeffs**2, dim=series.dim)


def lipschitz_estimate(kernel, grid=1000):
    """Numerical Lipschitz constant of r -> psi(<r, rho>) w.r.t. chord moves.

    Places ``grid`` points on a meridian through the reference direction and
    maximises |psi(t_i) - psi(t_j)| / ||r_i - r_j|| over all pairs.  A lower
    bound on the true constant that stabilises under grid refinement; the
    result is cached on ``kernel.lipschitz_sq``.
    """
    grid = int(grid)
    if grid < 100:
        raise ValueError("grid must be >= 100")
    theta = np.linspace(0.0, np.pi, grid)
    vals = kernel(np.cos(theta))
    dv = np.abs(vals[:, None] - vals[None, :])
    gap = 2.0 * np.abs(np.sin(0.5 * (theta[:, None] - theta[None, :])))
    mask = gap > 1e-15
    est = float(np.max(dv[mask] / gap[mask])) if np.any(mask) else 0.0
    kernel.lipschitz_sq = est
    return est


def epsilon_for_fwhm(kernel_factory, fwhm_deg, eps_lo=1e-4, eps_hi=1.0, tol=1e-10):
    """Scale parameter giving a target angular full width at half maximum.

    Solves ``psi_eps(cos(fwhm/2)) = 1/2`` for eps by bisection, using the
    fact that widening the kernel raises its value at a fixed angle.

    Parameters
    ----------
    kernel_factory : callable
        Map eps -> ZonalKernel (e.g. ``lambda e: matern_zonal(2.5, e)``).
    fwhm_deg : float
        Target full width at half maximum in degrees of great-circle angle.
    """
    if fwhm_deg <= 0:
        raise ValueError("fwhm_deg must be > 0")
    t_half = math.cos(math.radians(fwhm_deg) / 2.0)

    def gap(eps):
        return float(kernel_factory(eps)(t_half)) - 0.5

    lo, hi = float(eps_lo), float(eps_hi)
    glo, ghi = gap(lo), gap(hi)
    if glo > 0 or ghi < 0:
        raise ValueError("FWHM target not bracketed by [eps_lo, eps_hi]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
