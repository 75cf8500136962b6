"""Command-line entry point.

Subcommands
-----------
reconstruct
    Run a reconstruction described by a JSON config, with optional overrides
    for the penalty weight, solver, seed and output directory, or a geometric
    sweep over penalty weights.
synth-scatter / synth-counts
    Generate seeded synthetic data files (point samples, binned counts).
raster
    Evaluate saved coefficients on an equal-angle grid for plotting.
lattice
    Dump the knot lattice as lon/lat rows.

All CSVs are comma-separated UTF-8 with ``.`` decimals and LF line endings.
Exit status is 0 when the run completed (a manifest was written; either the
stop test fired or the iteration cap was hit, with residuals reported), and
nonzero on any error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .gram import PatchFunctional, assemble_gram
from .pipeline import (
    add_gaussian_noise,
    build_kernel,
    export_raster,
    load_coefficients_csv,
    plant_spline,
    poisson_counts,
    random_directions,
    run_reconstruction,
    save_patch_counts_csv,
    save_scatter_csv,
)
from .sphere import equal_angle_patch_grid, fibonacci_lattice, lonlat_from_direction
from .spline import evaluate, synthesize


def _add_kernel_args(p):
    p.add_argument("--family", default="matern",
                   choices=["matern", "wendland", "sobolev"])
    p.add_argument("--beta", type=float, help="smoothness order (matern/sobolev)")
    p.add_argument("--dim", type=int, default=3, help="wendland dimension d")
    p.add_argument("--order", type=int, help="wendland smoothness index k")
    p.add_argument("--epsilon", type=float, help="kernel scale")
    p.add_argument("--fwhm-deg", type=float,
                   help="target full width at half maximum, degrees")
    p.add_argument("--convention", default="standard",
                   choices=["standard", "eq60"])


def _kernel_spec(args):
    spec = {"family": args.family}
    if args.family == "matern":
        spec["beta"] = args.beta
        spec["convention"] = args.convention
    elif args.family == "wendland":
        spec["d"] = args.dim
        spec["k"] = args.order
    else:
        spec["beta"] = args.beta
    if args.family != "sobolev":
        if args.epsilon is not None:
            spec["epsilon"] = args.epsilon
        if args.fwhm_deg is not None:
            spec["fwhm_deg"] = args.fwhm_deg
    return spec


def _cmd_reconstruct(args):
    with open(args.config) as fh:
        spec = json.load(fh)
    if args.lam is not None:
        spec["lambda"] = args.lam
    if args.solver is not None:
        spec.setdefault("solver", {})
        spec["solver"]["kind"] = args.solver
    if args.seed is not None:
        spec["seed"] = args.seed
    if args.output_dir is not None:
        spec.setdefault("outputs", {})
        spec["outputs"]["directory"] = args.output_dir

    if args.lambda_sweep is not None:
        lo, hi, count = args.lambda_sweep
        count = int(count)
        if not (0 < lo <= hi and count >= 1):
            raise ValueError("sweep needs 0 < LO <= HI and COUNT >= 1")
        base = (spec.get("outputs") or {}).get("directory", ".")
        for i, lam in enumerate(np.geomspace(lo, hi, count)):
            sub = json.loads(json.dumps(spec))
            sub["lambda"] = float(lam)
            sub.setdefault("outputs", {})
            sub["outputs"]["directory"] = os.path.join(base, "lambda_%02d" % i)
            manifest = run_reconstruction(sub)
            print(
                "lambda=%.6g  objective=%.9g  nnz=%d  iterations=%d  converged=%s"
                % (lam, manifest["final_objective"], manifest["sparsity_count"],
                   manifest["iterations"], manifest["converged"])
            )
        return 0

    manifest = run_reconstruction(spec)
    print("manifest: %s" % manifest["outputs"]["manifest"])
    print(
        "iterations=%d  converged=%s  objective=%.9g  nnz=%d"
        % (manifest["iterations"], manifest["converged"],
           manifest["final_objective"], manifest["sparsity_count"])
    )
    if not manifest["converged"]:
        print(
            "warning: iteration cap reached; residual norms: %s"
            % json.dumps(manifest["residual_norms"]),
            file=sys.stderr,
        )
    return 0


def _cmd_synth_scatter(args):
    kernel = build_kernel(_kernel_spec(args))
    pool = fibonacci_lattice(args.knots)
    truth = plant_spline(kernel, pool, args.bumps, (args.amp_lo, args.amp_hi),
                         args.seed)
    dirs = random_directions(args.samples, args.seed + 1)
    values = evaluate(truth, dirs)
    if args.psnr_db is not None:
        values = add_gaussian_noise(values, args.psnr_db, args.seed + 2)
    lon, lat = lonlat_from_direction(dirs)
    save_scatter_csv(args.output, lon, lat, values)
    print("wrote %d samples to %s" % (values.size, args.output))
    return 0


def _cmd_synth_counts(args):
    kernel = build_kernel(_kernel_spec(args))
    pool = fibonacci_lattice(args.knots)
    truth = plant_spline(kernel, pool, args.bumps, (args.amp_lo, args.amp_hi),
                         args.seed)
    patches = equal_angle_patch_grid(args.grid[0], args.grid[1])
    functionals = [PatchFunctional(b) for b in patches]
    G = assemble_gram(kernel, functionals, pool)
    rates = args.rate_scale * np.clip(G.matvec(truth.coeffs), 0.0, None)
    counts = poisson_counts(rates, args.seed + 1)
    save_patch_counts_csv(args.output, patches, counts)
    print("wrote %d patch counts (total %d events) to %s"
          % (counts.size, int(counts.sum()), args.output))
    return 0


def _cmd_raster(args):
    dirs, coeffs = load_coefficients_csv(args.coefficients)
    kernel = build_kernel(_kernel_spec(args))
    field = synthesize(kernel, dirs, coeffs)
    export_raster(field, args.n_lat, args.n_lon, args.output)
    print("wrote %dx%d raster to %s" % (args.n_lat, args.n_lon, args.output))
    return 0


def _cmd_lattice(args):
    pts = fibonacci_lattice(args.n).points
    lon, lat = lonlat_from_direction(pts)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        out.write("lon_deg,lat_deg\n")
        for a, b in zip(lon, lat):
            out.write("%.17g,%.17g\n" % (a, b))
    finally:
        if args.output:
            out.close()
    if args.output:
        print("wrote %d lattice points to %s" % (args.n, args.output))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sphsplines",
        description="Sparse spherical-spline reconstruction from point or "
                    "patch measurements.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="run a reconstruction from a JSON config")
    p.add_argument("--config", required=True, help="JSON run description")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="override the penalty weight")
    p.add_argument("--solver", choices=["pds", "apgd", "tikhonov"],
                   help="override the solver")
    p.add_argument("--seed", type=int, help="override the RNG seed")
    p.add_argument("--output-dir", help="override the output directory")
    p.add_argument("--lambda-sweep", nargs=3, type=float,
                   metavar=("LO", "HI", "COUNT"),
                   help="geometric sweep over penalty weights")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("synth-scatter", help="generate noisy point samples")
    _add_kernel_args(p)
    p.add_argument("--output", required=True)
    p.add_argument("--knots", type=int, default=500, help="lattice pool size")
    p.add_argument("--bumps", type=int, default=8)
    p.add_argument("--amp-lo", type=float, default=0.5)
    p.add_argument("--amp-hi", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=1500)
    p.add_argument("--psnr-db", type=float, help="peak SNR of added noise; "
                   "omit for noiseless samples")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth_scatter)

    p = sub.add_parser("synth-counts", help="generate Poisson patch counts")
    _add_kernel_args(p)
    p.add_argument("--output", required=True)
    p.add_argument("--knots", type=int, default=500)
    p.add_argument("--bumps", type=int, default=8)
    p.add_argument("--amp-lo", type=float, default=0.5)
    p.add_argument("--amp-hi", type=float, default=2.0)
    p.add_argument("--grid", nargs=2, type=int, default=[12, 24],
                   metavar=("N_LAT", "N_LON"))
    p.add_argument("--rate-scale", type=float, default=50.0,
                   help="multiplier applied to patch integrals before drawing")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth_counts)

    p = sub.add_parser("raster", help="grid a saved coefficient file")
    _add_kernel_args(p)
    p.add_argument("--coefficients", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--n-lat", type=int, default=180)
    p.add_argument("--n-lon", type=int, default=360)
    p.set_defaults(func=_cmd_raster)

    p = sub.add_parser("lattice", help="dump Fibonacci lattice points")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.set_defaults(func=_cmd_lattice)

    return parser


def _provenance(exc):
    tb = exc.__traceback__
    module = None
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name == "__main__":
            name = "sphsplines.cli"
        if name.startswith("sphsplines"):
            module = name
        tb = tb.tb_next
    return module or type(exc).__module__


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(
            "error [%s] %s: %s" % (_provenance(exc), type(exc).__name__, exc),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
