"""Data-fidelity cost models, their proximity operators, and smooth gradients.

Each model anchors a measurement vector ``y`` and provides both the cost
value and its prox; the conjugate prox needed by the primal-dual iteration
comes from Moreau's identity, so only the primal formulas live here.  Costs
are separable (or a ball indicator), which keeps every prox closed-form.
"""

import numpy as np

from .gram import GramMatrix, spectral_norm

# indicator feasibility is checked to this relative slack when reporting
# cost values (the prox formulas themselves are exact)
FEASIBILITY_RTOL = 1e-6


class CostModel:
    """Base: a convex data-fidelity term F(y, .) anchored at measurements y."""

    smooth = False

    def __init__(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or y.size == 0:
            raise ValueError("y must be a nonempty 1-d vector")
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite")
        self.y = y

    def value(self, z):
        raise NotImplementedError

    def finite_value(self, z):
        """The finite part of the cost (0 for indicator models)."""
        return self.value(z)

    def __repr__(self):
        return "%s(L=%d)" % (type(self).__name__, self.y.size)


class ExactMatch(CostModel):
    """Indicator of {z = y}: hard interpolation constraints."""

    def value(self, z):
        tol = FEASIBILITY_RTOL * max(1.0, float(np.linalg.norm(self.y)))
        return 0.0 if np.linalg.norm(z - self.y) <= tol else np.inf

    def finite_value(self, z):
        return 0.0


class L1(CostModel):
    """Robust misfit ||z - y||_1."""

    def value(self, z):
        return float(np.abs(z - self.y).sum())


class L2Ball(CostModel):
    """Indicator of the ball ||z - y||_2 <= radius."""

    def __init__(self, y, radius):
        super().__init__(y)
        radius = float(radius)
        if radius <= 0:
            raise ValueError("radius must be > 0")
        self.radius = radius

    def value(self, z):
        slack = FEASIBILITY_RTOL * max(1.0, self.radius)
        inside = np.linalg.norm(z - self.y) <= self.radius + slack
        return 0.0 if inside else np.inf

    def finite_value(self, z):
        return 0.0


class KL(CostModel):
    """Generalised Kullback-Leibler divergence, for count data.

    ``sum_i y_i log(y_i / z_i) - y_i + z_i`` with the y_i = 0 terms reading
    z_i (their limit), so zero counts are allowed.
    """

    def __init__(self, y):
        super().__init__(y)
        if np.any(self.y < 0):
            raise ValueError("KL requires y >= 0 elementwise")

    def value(self, z):
        z = np.asarray(z, dtype=float)
        # boundary slack: iterates approach the z >= 0 constraint from
        # outside, so tiny negatives (relative feasibility) read as zero
        slack = FEASIBILITY_RTOL * (1.0 + self.y)
        z = np.where((z < 0) & (z >= -slack), 0.0, z)
        if np.any(z < 0):
            return np.inf
        pos = self.y > 0
        if np.any(z[pos] == 0):
            return np.inf
        with np.errstate(divide="ignore"):
            terms = self.y[pos] * np.log(self.y[pos] / z[pos]) - self.y[pos]
        return float(terms.sum() + z.sum())


class LeastSquares(CostModel):
    """Squared misfit ||y - z||_2^2 (smooth, Lipschitz gradient)."""

    smooth = True

    def value(self, z):
        return float(np.sum((self.y - z) ** 2))


def soft_threshold(z, theta):
    """Elementwise sign(z) * max(|z| - theta, 0)."""
    if theta < 0:
        raise ValueError("threshold must be >= 0")
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - theta, 0.0)


def prox_cost(model, tau, z):
    """prox_{tau F}(z) = argmin_x F(y, x) + (1/(2 tau)) ||x - z||^2.

    Closed forms per model: ExactMatch projects onto {y}; L1 soft-thresholds
    the residual; L2Ball projects onto the ball; KL solves its separable
    quadratic; LeastSquares averages toward y.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    z = np.asarray(z, dtype=float)
    if z.shape != model.y.shape:
        raise ValueError("z must match y in shape")
    y = model.y
    if isinstance(model, ExactMatch):
        return y.copy()
    if isinstance(model, L1):
        return soft_threshold(z - y, tau) + y
    if isinstance(model, L2Ball):
        d = z - y
        nd = np.linalg.norm(d)
        if nd <= model.radius:
            return z.copy()
        return y + (model.radius / nd) * d
    if isinstance(model, KL):
        if not np.all(np.isfinite(z)):
            raise ValueError("KL prox requires finite z")
        return 0.5 * (z - tau + np.sqrt((z - tau) ** 2 + 4.0 * tau * y))
    if isinstance(model, LeastSquares):
        return (z + 2.0 * tau * y) / (1.0 + 2.0 * tau)
    raise TypeError("unknown cost model: %r" % (model,))


def prox_conjugate(model, sigma, v):
    """prox_{sigma F*}(v) via Moreau: v - sigma * prox_{F / sigma}(v / sigma)."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    v = np.asarray(v, dtype=float)
    return v - sigma * prox_cost(model, 1.0 / sigma, v / sigma)


def grad_cost(model, G, x):
    """Gradient and Lipschitz constant of E(x) = F(y, Gx) for smooth F.

    Returns
    -------
    (gradient, lipschitz)
        ``2 G^T (G x - y)`` and ``2 ||G||_2^2`` for the LeastSquares model.

    Raises
    ------
    ValueError
        For proximable-only models, which the primal-dual solver
        (`solvers.pds_solve`) handles without gradients.
    """
    if not isinstance(model, LeastSquares):
        raise ValueError(
            "%s has no Lipschitz gradient; use the primal-dual solver"
            % type(model).__name__
        )
    x = np.asarray(x, dtype=float)
    if isinstance(G, GramMatrix):
        residual = G.matvec(x) - model.y
        gradient = 2.0 * G.rmatvec(residual)
    else:
        A = np.asarray(G, dtype=float)
        residual = A @ x - model.y
        gradient = 2.0 * (A.T @ residual)
    s = spectral_norm(G)
    return gradient, 2.0 * s * s
