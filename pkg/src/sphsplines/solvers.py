"""Proximal solvers for the penalised problem min F(y, Gx) + lambda*||x||_1,
plus the quadratically penalised baseline and RKHS projection.

The primal-dual iteration handles any proximable cost; the accelerated
gradient variant requires the smooth least-squares cost and trades dual
variables for momentum.  Both report a per-iteration objective trace
(the finite part, i.e. indicator costs contribute 0 while feasible).
"""

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.sparse.linalg import cg

from .gram import GramMatrix, knot_gram, spectral_norm
from .prox import grad_cost, prox_conjugate, soft_threshold
from .spline import SplineField

# relative-stop rule is undefined at x = 0; below this norm an absolute
# test ||x_n - x_{n-1}|| <= eps_stop is used instead
ZERO_NORM_FLOOR = 1e-30


class SolverConfig:
    """Knobs shared by the proximal solvers.

    Parameters
    ----------
    lam : float >= 0
        Regularisation weight on ||x||_1.
    eps_stop : float > 0
        Relative change threshold on successive primal iterates.
    max_iter : int >= 1
    tau, sigma : float, optional
        Primal/dual step sizes.  Auto when absent: tau = sigma = 1/||G||_2
        (and the missing one completes sigma*tau*||G||^2 = 1 when only one
        is given).  Given values must satisfy sigma*tau*||G||^2 <= 1.
    theta : float > 2
        Momentum denominator of the accelerated iteration.
    """

    def __init__(self, lam, eps_stop=1e-4, max_iter=20000, tau=None, sigma=None,
                 theta=75.0):
        lam = float(lam)
        if lam < 0:
            raise ValueError("lambda must be >= 0")
        if eps_stop <= 0:
            raise ValueError("eps_stop must be > 0")
        max_iter = int(max_iter)
        if max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if theta <= 2:
            raise ValueError("theta must be > 2")
        for name, v in (("tau", tau), ("sigma", sigma)):
            if v is not None and v <= 0:
                raise ValueError("%s must be > 0 when given" % name)
        self.lam = lam
        self.eps_stop = float(eps_stop)
        self.max_iter = max_iter
        self.tau = tau
        self.sigma = sigma
        self.theta = float(theta)

    def __repr__(self):
        return "SolverConfig(lam=%g, eps_stop=%g, max_iter=%d)" % (
            self.lam, self.eps_stop, self.max_iter,
        )


class SolverResult:
    """Solution vector plus run diagnostics."""

    def __init__(self, x, iterations, objective_trace, converged, primal_residual):
        trace = np.asarray(objective_trace, dtype=float)
        # +inf is legitimate early on (divergence costs at infeasible iterates)
        if np.any(np.isnan(trace)) or np.any(trace == -np.inf):
            raise ValueError("objective trace must not contain NaN or -inf")
        self.x = np.asarray(x, dtype=float)
        self.iterations = int(iterations)
        self.objective_trace = trace
        self.converged = bool(converged)
        self.primal_residual = float(primal_residual)

    def __repr__(self):
        return "SolverResult(n=%d, converged=%s, objective=%s)" % (
            self.iterations,
            self.converged,
            self.objective_trace[-1] if self.objective_trace.size else "n/a",
        )


def _as_gram(G):
    return G if isinstance(G, GramMatrix) else GramMatrix(np.atleast_2d(np.asarray(G, dtype=float)))


def _ulp_shift(x, n):
    for _ in range(abs(n)):
        x = np.nextafter(x, np.inf if n > 0 else 0.0)
    return float(x)


def _couple_auto_steps(norm):
    """Balanced steps tau = sigma = 1/norm with the coupling
    sigma*tau*norm**2 == 1.0 exact to the last bit.

    Squaring 1/norm can miss 1 by an ulp, so search a few ulps around the
    nominal steps (nearest-first) for an exact hit; fall back to the closest
    pair if the identity is unrepresentable for this norm.
    """
    u = norm * norm
    nominal = 1.0 / norm
    offsets = sorted(
        ((i, j) for i in range(-2, 3) for j in range(-4, 5)),
        key=lambda ij: (abs(ij[0]) + abs(ij[1]), abs(ij[0])),
    )
    best = (np.inf, nominal, nominal)
    for i, j in offsets:
        tau = _ulp_shift(nominal, i)
        sigma = _ulp_shift(nominal, j)
        gap = abs((tau * sigma) * u - 1.0)
        if gap == 0.0:
            return tau, sigma
        if gap < best[0]:
            best = (gap, tau, sigma)
    return best[1], best[2]


def _step_sizes(config, norm):
    tau, sigma = config.tau, config.sigma
    if tau is None and sigma is None:
        tau, sigma = _couple_auto_steps(norm)
    elif tau is None:
        tau = 1.0 / (sigma * norm * norm)
    elif sigma is None:
        sigma = 1.0 / (tau * norm * norm)
    else:
        if sigma * tau * norm * norm > 1.0 + 1e-12:
            raise ValueError(
                "step sizes violate sigma*tau*||G||^2 <= 1 (got %.6g)"
                % (sigma * tau * norm * norm)
            )
    return tau, sigma


def _stalled(delta, prev_norm, eps):
    if prev_norm < ZERO_NORM_FLOOR:
        return delta <= eps
    return delta <= eps * prev_norm


def pds_solve(G, model, config, x0=None, z0=None):
    """Primal-dual splitting for min F(y, Gx) + lambda*||x||_1.

    Per iteration: the primal step soft-thresholds a dual-adjusted gradient
    step, the dual step applies the conjugate prox at the extrapolated
    primal point.  Stops when both primal and dual iterates change by less
    than ``eps_stop`` relatively (the dual check keeps the cold start
    x0 = z0 = 0, whose first primal step is always stationary, from
    terminating before the dual has reacted to the data).
    """
    G = _as_gram(G)
    L, N = G.shape
    if model.y.size != L:
        raise ValueError("measurement length %d != Gram rows %d" % (model.y.size, L))
    norm = spectral_norm(G)
    tau, sigma = _step_sizes(config, norm)
    lam, eps = config.lam, config.eps_stop
    x = np.zeros(N) if x0 is None else np.array(x0, dtype=float)
    z = np.zeros(L) if z0 is None else np.array(z0, dtype=float)
    if x.shape != (N,) or z.shape != (L,):
        raise ValueError("x0/z0 shapes must match the system")
    gx = G.matvec(x)
    trace = []
    converged = False
    delta = np.inf
    iterations = 0
    for n in range(1, config.max_iter + 1):
        x_new = soft_threshold(x - tau * G.rmatvec(z), lam * tau)
        gx_new = G.matvec(x_new)
        z_new = prox_conjugate(model, sigma, z + sigma * (2.0 * gx_new - gx))
        trace.append(lam * np.abs(x_new).sum() + model.finite_value(gx_new))
        delta = np.linalg.norm(x_new - x)
        dual_delta = np.linalg.norm(z_new - z)
        stalled = _stalled(delta, np.linalg.norm(x), eps) and _stalled(
            dual_delta, np.linalg.norm(z), eps
        )
        x, gx, z = x_new, gx_new, z_new
        iterations = n
        if stalled:
            converged = True
            break
    return SolverResult(x, iterations, trace, converged, delta)


def apgd_solve(G, model, config, x0=None):
    """Accelerated proximal gradient descent for smooth costs.

    Per iteration: a gradient step on E(x) = F(y, Gx) followed by
    soft-thresholding, then momentum extrapolation with weight
    (n - 1)/(n + theta).  Returns the proximal (non-extrapolated) iterate.
    """
    if not model.smooth:
        raise ValueError(
            "%s has no Lipschitz gradient; use pds_solve" % type(model).__name__
        )
    G = _as_gram(G)
    L, N = G.shape
    if model.y.size != L:
        raise ValueError("measurement length %d != Gram rows %d" % (model.y.size, L))
    x = np.zeros(N) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (N,):
        raise ValueError("x0 shape must match the knot count")
    _, lipschitz = grad_cost(model, G, x)
    tau = config.tau if config.tau is not None else 1.0 / lipschitz
    lam, eps, theta = config.lam, config.eps_stop, config.theta
    z_old = x.copy()
    trace = []
    converged = False
    delta = np.inf
    iterations = 0
    z_new = x
    for n in range(1, config.max_iter + 1):
        gradient, _ = grad_cost(model, G, x)
        z_new = soft_threshold(x - tau * gradient, lam * tau)
        x_new = z_new + ((n - 1.0) / (n + theta)) * (z_new - z_old)
        trace.append(lam * np.abs(z_new).sum() + model.finite_value(G.matvec(z_new)))
        delta = np.linalg.norm(x_new - x)
        stalled = _stalled(delta, np.linalg.norm(x), eps)
        x, z_old = x_new, z_new
        iterations = n
        if stalled:
            converged = True
            break
    return SolverResult(z_new, iterations, trace, converged, delta)


def tikhonov_solve(K, y, mu, cg_tol=1e-10, cg_maxiter=None, return_info=False):
    """Quadratically penalised baseline: solve (K + mu*I) x = y by CG.

    With ``return_info=True`` returns ``(x, n_iterations)``.

    Raises
    ------
    ValueError
        mu <= 0 or non-symmetric K.
    RuntimeError
        CG failed to reach ``cg_tol`` within ``cg_maxiter`` (reports the
        achieved relative residual).
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    if mu <= 0:
        raise ValueError("mu must be > 0")
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.size:
        raise ValueError("K must be square and match y")
    if not np.allclose(K, K.T, rtol=1e-10, atol=1e-12):
        raise ValueError("K must be symmetric")
    A = K + mu * np.eye(K.shape[0])
    count = [0]
    x, info = cg(
        A, y, rtol=cg_tol, atol=0.0, maxiter=cg_maxiter,
        callback=lambda _: count.__setitem__(0, count[0] + 1),
    )
    if info != 0:
        achieved = np.linalg.norm(A @ x - y) / max(np.linalg.norm(y), 1e-300)
        raise RuntimeError(
            "conjugate gradient stopped after %d iterations at relative "
            "residual %.3e (target %.3e)" % (info, achieved, cg_tol)
        )
    if return_info:
        return x, count[0]
    return x


def rkhs_project(kernel, knots, samples):
    """Project point samples onto the lattice spline space.

    The projection of h onto span{psi(<., r_n>)} interpolates h at the
    knots, so the coefficients solve ``K c = h(knots)`` with K the knot
    Gram matrix (symmetric positive definite for distinct knots), done by
    Cholesky.

    Returns
    -------
    SplineField
    """
    samples = np.asarray(samples, dtype=float)
    K = knot_gram(kernel, knots)
    if samples.shape != (K.shape[0],):
        raise ValueError("need one sample per knot")
    try:
        c = cho_solve(cho_factor(K), samples)
    except LinAlgError as exc:
        raise ValueError("knot Gram matrix is not positive definite: %s" % exc)
    return SplineField(kernel, knots, c)
