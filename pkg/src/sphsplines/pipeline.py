"""End-to-end reconstruction runs.

Wires the pieces together: JSON run configs, scatter/patch-count CSV I/O,
synthetic data generation (planted splines, Gaussian noise by PSNR, Poisson
counts), the solve itself, and the exported artifacts (coefficient CSV,
objective trace, raster grid, JSON manifest).  Runs with the same config and
seed write byte-identical coefficient files.
"""

import csv
import json
import os
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .gram import DiracFunctional, PatchFunctional, assemble_gram, knot_gram
from .kernels import (
    ZonalKernel,
    epsilon_for_fwhm,
    matern_zonal,
    self_convolve,
    sobolev_green_zonal,
    wendland_zonal,
)
from .prox import KL, L1, ExactMatch, L2Ball, LeastSquares
from .solvers import SolverConfig, apgd_solve, pds_solve, tikhonov_solve
from .sphere import (
    KnotSet,
    PatchBounds,
    direction_from_lonlat,
    equal_angle_patch_grid,
    fibonacci_lattice,
    lonlat_from_direction,
)
from .spline import SplineField, evaluate, sparsity_report, synthesize

# shortest representation that round-trips float64 exactly
FLOAT_FMT = "%.17g"

SCATTER_HEADER = ["lon_deg", "lat_deg", "value"]
COUNTS_HEADER = ["lon_min", "lon_max", "lat_min", "lat_max", "count"]
COEFF_HEADER = ["index", "lon_deg", "lat_deg", "coeff"]


# ----------------------------------------------------------------- CSV I/O


def _parse_float(text, path, line_no, what):
    try:
        return float(text)
    except ValueError:
        raise ValueError(
            "%s line %d: cannot parse %s from %r" % (path, line_no, what, text)
        )


def load_scatter_csv(path):
    """Read point samples: header ``lon_deg,lat_deg,value``.

    Returns
    -------
    (directions, values)
        ``(M, 3)`` unit directions and an ``(M,)`` value vector; both empty
        for a header-only file.
    """
    lons, lats, values = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SCATTER_HEADER:
            raise ValueError("%s: expected header %s" % (path, ",".join(SCATTER_HEADER)))
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(
                    "%s line %d: expected 3 fields, got %d" % (path, line_no, len(row))
                )
            lon = _parse_float(row[0], path, line_no, "lon_deg")
            lat = _parse_float(row[1], path, line_no, "lat_deg")
            if not -90.0 <= lat <= 90.0:
                raise ValueError(
                    "%s line %d: latitude %g out of [-90, 90]" % (path, line_no, lat)
                )
            lons.append(lon)
            lats.append(lat)
            values.append(_parse_float(row[2], path, line_no, "value"))
    if not lons:
        return np.empty((0, 3)), np.empty(0)
    return direction_from_lonlat(np.array(lons), np.array(lats)), np.array(values)


def save_scatter_csv(path, lon_deg, lat_deg, values):
    """Write point samples in the `load_scatter_csv` format (17 digits)."""
    lon_deg, lat_deg, values = map(np.atleast_1d, (lon_deg, lat_deg, values))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SCATTER_HEADER) + "\n")
        for lon, lat, v in zip(lon_deg, lat_deg, values):
            fh.write(
                ",".join(FLOAT_FMT % u for u in (lon, lat, v)) + "\n"
            )


def load_patch_counts_csv(path):
    """Read binned counts: header ``lon_min,lon_max,lat_min,lat_max,count``.

    Counts must be nonnegative integers; patches may overlap.
    """
    bounds, counts = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != COUNTS_HEADER:
            raise ValueError("%s: expected header %s" % (path, ",".join(COUNTS_HEADER)))
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ValueError(
                    "%s line %d: expected 5 fields, got %d" % (path, line_no, len(row))
                )
            edges = [
                _parse_float(row[i], path, line_no, COUNTS_HEADER[i]) for i in range(4)
            ]
            try:
                count = int(row[4])
            except ValueError:
                raise ValueError(
                    "%s line %d: count must be an integer, got %r"
                    % (path, line_no, row[4])
                )
            if count < 0:
                raise ValueError(
                    "%s line %d: negative count %d" % (path, line_no, count)
                )
            try:
                bounds.append(PatchBounds(*edges))
            except ValueError as exc:
                raise ValueError("%s line %d: %s" % (path, line_no, exc))
            counts.append(count)
    return bounds, np.array(counts, dtype=float)


def save_patch_counts_csv(path, bounds, counts):
    """Write binned counts in the `load_patch_counts_csv` format."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(COUNTS_HEADER) + "\n")
        for b, c in zip(bounds, counts):
            fields = [FLOAT_FMT % u for u in (b.lon_min, b.lon_max, b.lat_min, b.lat_max)]
            fh.write(",".join(fields) + ",%d\n" % int(c))


def save_coefficients_csv(path, field):
    """Write ``index,lon_deg,lat_deg,coeff`` rows for a spline field."""
    lon, lat = lonlat_from_direction(field.knots.points)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(COEFF_HEADER) + "\n")
        for i, c in enumerate(field.coeffs):
            fh.write(
                "%d,%s,%s,%s\n"
                % (i, FLOAT_FMT % lon[i], FLOAT_FMT % lat[i], FLOAT_FMT % c)
            )


def load_coefficients_csv(path):
    """Read a coefficient file back into (directions, coeffs)."""
    lons, lats, coeffs = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != COEFF_HEADER:
            raise ValueError("%s: expected header %s" % (path, ",".join(COEFF_HEADER)))
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(
                    "%s line %d: expected 4 fields, got %d" % (path, line_no, len(row))
                )
            lons.append(_parse_float(row[1], path, line_no, "lon_deg"))
            lats.append(_parse_float(row[2], path, line_no, "lat_deg"))
            coeffs.append(_parse_float(row[3], path, line_no, "coeff"))
    return (
        direction_from_lonlat(np.array(lons), np.array(lats)),
        np.array(coeffs),
    )


# -------------------------------------------------------- synthetic sources


def plant_spline(kernel, pool, n_bumps, amplitude_range, seed):
    """Ground-truth field: n_bumps knots drawn uniformly from the pool.

    Amplitudes are uniform over ``amplitude_range`` (use a negative lower
    bound for signed fields; keep it positive when the field feeds a Poisson
    rate).  Deterministic for a given seed.
    """
    n_bumps = int(n_bumps)
    if n_bumps < 1:
        raise ValueError("n_bumps must be >= 1")
    if n_bumps > len(pool):
        raise ValueError("pool has only %d knots" % len(pool))
    lo, hi = map(float, amplitude_range)
    if not lo < hi:
        raise ValueError("amplitude_range must be increasing")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(pool), size=n_bumps, replace=False)
    coeffs = np.zeros(len(pool))
    coeffs[idx] = rng.uniform(lo, hi, size=n_bumps)
    return SplineField(kernel, pool, coeffs)


def add_gaussian_noise(values, psnr_db, seed):
    """Additive white noise with sigma = max|value| / 10^(psnr_db / 20)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be nonempty")
    peak = np.abs(values).max()
    if peak == 0.0:
        raise ValueError("all-zero signal: peak signal-to-noise undefined")
    # negative exponent so extreme PSNR underflows to sigma = 0 cleanly
    sigma = peak * 10.0 ** (-psnr_db / 20.0)
    rng = np.random.default_rng(seed)
    return values + sigma * rng.standard_normal(values.shape)


def poisson_counts(rates, seed):
    """Seeded Poisson deviates, one per rate."""
    rates = np.asarray(rates, dtype=float)
    if np.any(~np.isfinite(rates)) or np.any(rates < 0):
        raise ValueError("rates must be finite and >= 0")
    rng = np.random.default_rng(seed)
    return rng.poisson(rates)


def random_directions(n, seed):
    """n directions drawn uniformly on the sphere (normalised Gaussians)."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((int(n), 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


# -------------------------------------------------------------- run configs

_COST_KINDS = ("exact", "l2ball", "l1", "kl", "ls")
_SOLVER_KINDS = ("pds", "apgd", "tikhonov")


class RunConfig:
    """Validated reconstruction run description (one JSON document).

    See `to_dict` for the normalised layout; every default the run uses is
    explicit there, and the manifest echoes it.
    """

    def __init__(self, spec):
        spec = dict(spec)
        kernel = dict(spec.get("kernel") or {})
        family = kernel.get("family")
        if family not in ("matern", "wendland", "sobolev"):
            raise ValueError("kernel.family must be matern, wendland or sobolev")
        if family != "sobolev" and ("epsilon" in kernel) == ("fwhm_deg" in kernel):
            raise ValueError("kernel needs exactly one of epsilon / fwhm_deg")
        if family == "matern":
            kernel.setdefault("convention", "standard")
        elif family == "wendland":
            kernel.setdefault("d", 3)
        self.kernel_spec = kernel

        knots = dict(spec.get("knots") or {})
        n = knots.get("fibonacci")
        if not isinstance(n, int) or n < 1:
            raise ValueError("knots.fibonacci must be a positive integer")
        self.n_knots = n

        sampling = dict(spec.get("sampling") or {})
        sources = [k for k in ("scatter_csv", "patch_csv", "synthetic") if k in sampling]
        if len(sources) != 1:
            raise ValueError(
                "sampling must name exactly one source "
                "(scatter_csv | patch_csv | synthetic)"
            )
        if "patch_csv" in sampling:
            sampling.setdefault("quadrature_order", 8)
        if "synthetic" in sampling:
            synth = dict(sampling["synthetic"])
            if synth.get("kind") not in ("scatter", "counts"):
                raise ValueError("synthetic.kind must be scatter or counts")
            synth.setdefault("bumps", 8)
            synth.setdefault("amplitude", [0.5, 2.0])
            synth.setdefault("seed", spec.get("seed"))
            if synth["kind"] == "scatter":
                synth.setdefault("samples", 3 * n)
                synth.setdefault("psnr_db", None)
            else:
                synth.setdefault("grid", [12, 24])
                synth.setdefault("rate_scale", 1.0)
                synth.setdefault("quadrature_order", 8)
            sampling = {"synthetic": synth}
        self.sampling = sampling

        cost = dict(spec.get("cost") or {})
        if cost.get("kind") not in _COST_KINDS:
            raise ValueError("cost.kind must be one of %s" % (_COST_KINDS,))
        if cost["kind"] == "l2ball" and not cost.get("rho_rel", 0) > 0:
            raise ValueError("l2ball cost needs rho_rel > 0")
        cost.setdefault("rho_rel", None)
        self.cost = cost

        solver = dict(spec.get("solver") or {})
        if solver.get("kind") not in _SOLVER_KINDS:
            raise ValueError("solver.kind must be one of %s" % (_SOLVER_KINDS,))
        if solver["kind"] == "apgd" and cost["kind"] != "ls":
            raise ValueError("apgd needs the smooth ls cost")
        if solver["kind"] == "tikhonov" and not solver.get("mu", 0) > 0:
            raise ValueError("tikhonov solver needs mu > 0")
        solver.setdefault("mu", None)
        self.solver = solver

        self.lam = float(spec.get("lambda", 0.0))
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        self.eps_stop = float(spec.get("eps_stop", 1e-4))
        self.max_iter = int(spec.get("max_iter", 20000))
        self.seed = spec.get("seed")
        if self.seed is not None:
            self.seed = int(self.seed)

        outputs = dict(spec.get("outputs") or {})
        outputs.setdefault("directory", ".")
        outputs.setdefault("coefficients", "coefficients.csv")
        outputs.setdefault("manifest", "manifest.json")
        outputs.setdefault("trace", "trace.csv")
        outputs.setdefault("raster", None)
        if outputs["raster"] is not None:
            raster = dict(outputs["raster"])
            for key in ("n_lat", "n_lon", "path"):
                if key not in raster:
                    raise ValueError("outputs.raster needs n_lat, n_lon, path")
            outputs["raster"] = raster
        self.outputs = outputs

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls(json.load(fh))

    def to_dict(self):
        return {
            "kernel": dict(self.kernel_spec),
            "knots": {"fibonacci": self.n_knots},
            "sampling": self.sampling,
            "cost": dict(self.cost),
            "solver": dict(self.solver),
            "lambda": self.lam,
            "eps_stop": self.eps_stop,
            "max_iter": self.max_iter,
            "seed": self.seed,
            "outputs": self.outputs,
        }

    def output_path(self, name):
        value = self.outputs[name] if name != "raster" else self.outputs["raster"]["path"]
        if os.path.isabs(value):
            return value
        return os.path.join(self.outputs["directory"], value)


def build_kernel(spec):
    """ZonalKernel from a config kernel spec (dict)."""
    family = spec.get("family")
    if family in ("matern", "sobolev") and spec.get("beta") is None:
        raise ValueError("%s kernel needs beta" % family)
    if family == "sobolev":
        return sobolev_green_zonal(float(spec["beta"]), tol=spec.get("tol", 1e-8))
    if family == "matern":
        beta = float(spec["beta"])
        convention = spec.get("convention", "standard")
        factory = lambda eps: matern_zonal(beta, eps, convention=convention)
    elif family == "wendland":
        if spec.get("k") is None:
            raise ValueError("wendland kernel needs the smoothness index k")
        d, k = int(spec.get("d", 3)), int(spec["k"])
        factory = lambda eps: wendland_zonal(d, k, eps)
    else:
        raise ValueError("unknown kernel family %r" % (family,))
    if "fwhm_deg" in spec:
        eps = epsilon_for_fwhm(factory, float(spec["fwhm_deg"]))
    else:
        eps = float(spec["epsilon"])
    return factory(eps)


class RunManifest:
    """Run summary written alongside the artifacts."""

    def __init__(self, data):
        self.data = dict(data)

    def __getitem__(self, key):
        return self.data[key]

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _synthetic_measurements(cfg, kernel, knots):
    synth = cfg.sampling["synthetic"]
    seed = synth.get("seed", cfg.seed)
    amplitude = synth.get("amplitude", [0.5, 2.0])
    truth = plant_spline(kernel, knots, synth.get("bumps", 8), amplitude, seed)
    if synth["kind"] == "scatter":
        dirs = random_directions(synth.get("samples", 3 * len(knots)), None if seed is None else seed + 1)
        values = evaluate(truth, dirs)
        if synth.get("psnr_db") is not None:
            values = add_gaussian_noise(
                values, float(synth["psnr_db"]), None if seed is None else seed + 2
            )
        functionals = [DiracFunctional(d) for d in dirs]
        return functionals, values
    # counts: Poisson draws around patch integrals of the planted field
    n_lat, n_lon = synth.get("grid", [12, 24])
    scale = float(synth.get("rate_scale", 1.0))
    patches = equal_angle_patch_grid(n_lat, n_lon)
    functionals = [
        PatchFunctional(b, synth.get("quadrature_order", 8)) for b in patches
    ]
    G_truth = assemble_gram(kernel, functionals, knots)
    rates = scale * np.clip(G_truth.matvec(truth.coeffs), 0.0, None)
    counts = poisson_counts(rates, None if seed is None else seed + 1)
    return functionals, counts.astype(float)


def _load_measurements(cfg, kernel, knots):
    if "scatter_csv" in cfg.sampling:
        dirs, values = load_scatter_csv(cfg.sampling["scatter_csv"])
        if len(values) == 0:
            raise ValueError("scatter file %r has no rows" % cfg.sampling["scatter_csv"])
        return [DiracFunctional(d) for d in dirs], values
    if "patch_csv" in cfg.sampling:
        bounds, counts = load_patch_counts_csv(cfg.sampling["patch_csv"])
        if len(counts) == 0:
            raise ValueError("patch file %r has no rows" % cfg.sampling["patch_csv"])
        Q = int(cfg.sampling.get("quadrature_order", 8))
        return [PatchFunctional(b, Q) for b in bounds], counts
    return _synthetic_measurements(cfg, kernel, knots)


def _cost_model(cfg, y):
    kind = cfg.cost["kind"]
    if kind == "exact":
        return ExactMatch(y)
    if kind == "l1":
        return L1(y)
    if kind == "l2ball":
        return L2Ball(y, float(cfg.cost["rho_rel"]) * np.linalg.norm(y))
    if kind == "kl":
        return KL(y)
    return LeastSquares(y)


def run_reconstruction(config):
    """Execute one reconstruction run and write all artifacts.

    Returns
    -------
    RunManifest
        Also written as JSON to the configured manifest path.
    """
    cfg = config if isinstance(config, RunConfig) else RunConfig(config)
    started = time.perf_counter()
    os.makedirs(cfg.outputs["directory"], exist_ok=True)
    kernel = build_kernel(cfg.kernel_spec)
    knots = fibonacci_lattice(cfg.n_knots)
    functionals, y = _load_measurements(cfg, kernel, knots)
    model = _cost_model(cfg, y)
    solver_kind = cfg.solver["kind"]

    if solver_kind == "tikhonov":
        if not all(isinstance(f, DiracFunctional) for f in functionals):
            raise ValueError("the quadratic baseline supports point samples only")
        sample_dirs = np.array([f.direction for f in functionals])
        conv = self_convolve(kernel.series())
        K = knot_gram(conv, KnotSet(sample_dirs))
        mu = float(cfg.solver["mu"])
        x, cg_iterations = tikhonov_solve(
            K, y, mu, cg_maxiter=cfg.max_iter, return_info=True
        )
        field_kernel = ZonalKernel.from_series(conv, family="self_convolved")
        field = synthesize(field_kernel, sample_dirs, x)
        misfit = float(np.linalg.norm(K @ x - y))
        objective = misfit**2 + mu * float(x @ (K @ x))
        trace = [objective]
        iterations = cg_iterations
        converged = True
        residuals = {
            "cg_relative": float(
                np.linalg.norm((K + mu * np.eye(K.shape[0])) @ x - y)
                / max(np.linalg.norm(y), 1e-300)
            ),
            "data_misfit": misfit,
        }
    else:
        G = assemble_gram(kernel, functionals, knots)
        solver_cfg = SolverConfig(cfg.lam, eps_stop=cfg.eps_stop, max_iter=cfg.max_iter)
        solve = apgd_solve if solver_kind == "apgd" else pds_solve
        result = solve(G, model, solver_cfg)
        field = synthesize(kernel, knots, result.x)
        gx = G.matvec(result.x)
        trace = result.objective_trace
        iterations = result.iterations
        converged = result.converged
        objective = cfg.lam * float(np.abs(result.x).sum()) + model.finite_value(gx)
        residuals = {
            "primal_step": result.primal_residual,
            "data_misfit": float(np.linalg.norm(gx - y)),
        }

    coeff_path = cfg.output_path("coefficients")
    save_coefficients_csv(coeff_path, field)
    trace_path = cfg.output_path("trace")
    with open(trace_path, "w", newline="") as fh:
        fh.write("iteration,objective\n")
        for i, v in enumerate(trace, start=1):
            fh.write("%d,%s\n" % (i, FLOAT_FMT % v))
    raster_path = None
    if cfg.outputs["raster"] is not None:
        raster = cfg.outputs["raster"]
        raster_path = cfg.output_path("raster")
        export_raster(field, int(raster["n_lat"]), int(raster["n_lon"]), raster_path)

    manifest = RunManifest(
        {
            "config": cfg.to_dict(),
            "iterations": int(iterations),
            "converged": bool(converged),
            "final_objective": float(objective),
            "residual_norms": residuals,
            "sparsity_count": sparsity_report(field).count,
            "wall_time_s": time.perf_counter() - started,
            "library_version": __version__,
            "rng_seed": cfg.seed,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "outputs": {
                "coefficients": coeff_path,
                "trace": trace_path,
                "raster": raster_path,
                "manifest": cfg.output_path("manifest"),
            },
        }
    )
    manifest.write(cfg.output_path("manifest"))
    return manifest


def export_raster(field, n_lat, n_lon, path):
    """Write ``lon_deg,lat_deg,value`` at the cell centres of an equal-angle
    grid (south-to-north rows, west-to-east columns)."""
    n_lat, n_lon = int(n_lat), int(n_lon)
    if n_lat < 2 or n_lon < 2:
        raise ValueError("raster needs n_lat, n_lon >= 2")
    lat = -90.0 + (np.arange(n_lat) + 0.5) * (180.0 / n_lat)
    lon = -180.0 + (np.arange(n_lon) + 0.5) * (360.0 / n_lon)
    lon_grid, lat_grid = np.meshgrid(lon, lat)  # (n_lat, n_lon)
    lon_flat, lat_flat = lon_grid.ravel(), lat_grid.ravel()
    dirs = direction_from_lonlat(lon_flat, lat_flat)
    # modest chunk: series-backed kernels expand each evaluation by n_max+1
    values = evaluate(field, dirs, chunk=512)
    with open(path, "w", newline="") as fh:
        fh.write("lon_deg,lat_deg,value\n")
        fh.writelines(
            "%s,%s,%s\n" % (FLOAT_FMT % a, FLOAT_FMT % b, FLOAT_FMT % v)
            for a, b, v in zip(lon_flat, lat_flat, values)
        )
    return path
