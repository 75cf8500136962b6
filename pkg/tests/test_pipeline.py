"""End-to-end run tests: CSV formats, synthetic sources, manifests, rasters."""

import json
import os
import time

import numpy as np
import pytest

from sphsplines.gram import DiracFunctional, assemble_gram
from sphsplines.kernels import matern_zonal, wendland_zonal
from sphsplines.pipeline import (
    RunConfig,
    add_gaussian_noise,
    build_kernel,
    export_raster,
    load_coefficients_csv,
    load_patch_counts_csv,
    load_scatter_csv,
    plant_spline,
    poisson_counts,
    run_reconstruction,
    save_patch_counts_csv,
    save_scatter_csv,
)
from sphsplines.prox import ExactMatch, L2Ball
from sphsplines.sphere import (
    PatchBounds,
    equal_angle_patch_grid,
    fibonacci_lattice,
    lonlat_from_direction,
)
from sphsplines.spline import SplineField, evaluate, synthesize

import sphsplines.pipeline as pipeline


# ------------------------------------------------------------- scatter CSV


def test_scatter_roundtrip_lossless(tmp_path):
    rng = np.random.default_rng(0)
    lon = rng.uniform(-180, 180, 50)
    lat = rng.uniform(-90, 90, 50)
    val = rng.standard_normal(50) * 1e3
    path = tmp_path / "s.csv"
    save_scatter_csv(path, lon, lat, val)
    dirs, back = load_scatter_csv(path)
    lon2, lat2 = lonlat_from_direction(dirs)
    # 17 significant digits round-trip float64 exactly
    assert np.array_equal(back, val)
    assert np.allclose(lon2, lon, atol=1e-12)
    assert np.allclose(lat2, lat, atol=1e-12)


def test_scatter_header_required(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n0,0,1\n")
    with pytest.raises(ValueError, match="header"):
        load_scatter_csv(path)


def test_scatter_parse_error_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("lon_deg,lat_deg,value\n0,0,1\n10,oops,2\n")
    with pytest.raises(ValueError, match="line 3"):
        load_scatter_csv(path)


def test_scatter_latitude_range_checked(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("lon_deg,lat_deg,value\n0,95,1\n")
    with pytest.raises(ValueError, match="line 2.*latitude"):
        load_scatter_csv(path)


def test_scatter_empty_data_is_valid(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("lon_deg,lat_deg,value\n")
    dirs, values = load_scatter_csv(path)
    assert dirs.shape == (0, 3) and values.shape == (0,)


# -------------------------------------------------------------- counts CSV


def test_counts_roundtrip_and_overlap_ok(tmp_path):
    bounds = [PatchBounds(0, 20, 0, 10), PatchBounds(10, 30, 5, 15)]  # overlap
    counts = np.array([3, 0])
    path = tmp_path / "c.csv"
    save_patch_counts_csv(path, bounds, counts)
    back_bounds, back_counts = load_patch_counts_csv(path)
    assert np.array_equal(back_counts, counts)
    assert back_bounds[1].lon_min == 10 and back_bounds[1].lat_max == 15


def test_counts_negative_rejected(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("lon_min,lon_max,lat_min,lat_max,count\n0,10,0,10,-1\n")
    with pytest.raises(ValueError, match="line 2.*negative"):
        load_patch_counts_csv(path)


def test_counts_noninteger_rejected(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("lon_min,lon_max,lat_min,lat_max,count\n0,10,0,10,2.5\n")
    with pytest.raises(ValueError, match="line 2.*integer"):
        load_patch_counts_csv(path)


def test_counts_full_resolution_grid_parses_fast(tmp_path):
    # 1.5 degree global grid: 120 x 240 = 28800 rows
    patches = equal_angle_patch_grid(120, 240)
    counts = np.arange(len(patches)) % 7
    path = tmp_path / "grid.csv"
    save_patch_counts_csv(path, patches, counts)
    start = time.perf_counter()
    bounds, back = load_patch_counts_csv(path)
    elapsed = time.perf_counter() - start
    assert len(bounds) == 28800
    assert np.array_equal(back, counts)
    assert elapsed < 1.0


# -------------------------------------------------------- synthetic sources


def test_plant_spline_deterministic():
    kernel = matern_zonal(2.5, 0.3, convention="eq60")
    pool = fibonacci_lattice(100)
    a = plant_spline(kernel, pool, 6, (0.5, 2.0), 42)
    b = plant_spline(kernel, pool, 6, (0.5, 2.0), 42)
    c = plant_spline(kernel, pool, 6, (0.5, 2.0), 43)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert not np.array_equal(a.coeffs, c.coeffs)
    assert np.count_nonzero(a.coeffs) == 6
    nz = a.coeffs[a.coeffs != 0]
    assert np.all((nz >= 0.5) & (nz <= 2.0))


def test_plant_spline_validation():
    kernel = matern_zonal(2.5, 0.3)
    pool = fibonacci_lattice(10)
    with pytest.raises(ValueError, match="n_bumps"):
        plant_spline(kernel, pool, 0, (0, 1), 0)
    with pytest.raises(ValueError, match="pool"):
        plant_spline(kernel, pool, 11, (0, 1), 0)
    with pytest.raises(ValueError, match="increasing"):
        plant_spline(kernel, pool, 2, (1.0, 1.0), 0)


def test_noise_psnr_definition():
    rng = np.random.default_rng(5)
    values = rng.uniform(1.0, 3.0, 100_000)
    peak = values.max()
    psnr = 12.0
    noisy = add_gaussian_noise(values, psnr, 7)
    sigma_emp = np.std(noisy - values)
    sigma_target = peak / 10 ** (psnr / 20)
    assert abs(sigma_emp - sigma_target) < 0.02 * sigma_target


def test_noise_extreme_psnr_is_identity():
    values = np.array([1.0, -2.0, 0.5])
    noisy = add_gaussian_noise(values, 1e9, 0)
    assert np.max(np.abs(noisy - values)) < 1e-12


def test_noise_rejects_zero_signal():
    with pytest.raises(ValueError, match="all-zero"):
        add_gaussian_noise(np.zeros(4), 20.0, 0)


def test_poisson_counts_mean():
    rates = np.full(100_000, 7.0)
    counts = poisson_counts(rates, 3)
    assert counts.min() >= 0
    assert abs(counts.mean() - 7.0) < 0.02 * 7.0


def test_poisson_rejects_negative_rates():
    with pytest.raises(ValueError, match="rates"):
        poisson_counts(np.array([1.0, -0.1]), 0)


# -------------------------------------------------------------- run config


def test_config_requires_single_source():
    base = {
        "kernel": {"family": "matern", "beta": 2.5, "epsilon": 0.3},
        "knots": {"fibonacci": 10},
        "cost": {"kind": "exact"},
        "solver": {"kind": "pds"},
    }
    with pytest.raises(ValueError, match="exactly one"):
        RunConfig({**base, "sampling": {}})
    with pytest.raises(ValueError, match="exactly one"):
        RunConfig({**base, "sampling": {"scatter_csv": "a.csv",
                                        "synthetic": {"kind": "scatter"}}})


def test_config_solver_cost_compatibility():
    base = {
        "kernel": {"family": "matern", "beta": 2.5, "epsilon": 0.3},
        "knots": {"fibonacci": 10},
        "sampling": {"scatter_csv": "a.csv"},
    }
    with pytest.raises(ValueError, match="apgd"):
        RunConfig({**base, "cost": {"kind": "exact"}, "solver": {"kind": "apgd"}})
    with pytest.raises(ValueError, match="mu"):
        RunConfig({**base, "cost": {"kind": "ls"}, "solver": {"kind": "tikhonov"}})
    with pytest.raises(ValueError, match="rho_rel"):
        RunConfig({**base, "cost": {"kind": "l2ball"}, "solver": {"kind": "pds"}})
    cfg = RunConfig({**base, "cost": {"kind": "ls"}, "solver": {"kind": "apgd"},
                     "lambda": 0.1})
    assert cfg.solver["kind"] == "apgd"


def test_config_echo_makes_defaults_explicit():
    cfg = RunConfig({
        "kernel": {"family": "matern", "beta": 2.5, "epsilon": 0.3},
        "knots": {"fibonacci": 10},
        "sampling": {"synthetic": {"kind": "scatter"}},
        "cost": {"kind": "exact"},
        "solver": {"kind": "pds"},
        "seed": 4,
    })
    echo = cfg.to_dict()
    assert echo["kernel"]["convention"] == "standard"
    assert echo["eps_stop"] == 1e-4 and echo["max_iter"] == 20000
    synth = echo["sampling"]["synthetic"]
    assert synth["samples"] == 30 and synth["bumps"] == 8
    assert synth["seed"] == 4
    assert echo["outputs"]["coefficients"] == "coefficients.csv"


# ------------------------------------------------------------ full runs


def _scatter_selftest_config(outdir, **overrides):
    cfg = {
        "kernel": {"family": "matern", "beta": 2.5, "epsilon": 0.35,
                   "convention": "eq60"},
        "knots": {"fibonacci": 80},
        "sampling": {"synthetic": {"kind": "scatter", "bumps": 5,
                                   "amplitude": [0.5, 2.0], "samples": 240}},
        "cost": {"kind": "exact"},
        "lambda": 1e-4,
        "solver": {"kind": "pds"},
        "eps_stop": 1e-9,
        "max_iter": 120000,
        "seed": 7,
        "outputs": {"directory": str(outdir)},
    }
    cfg.update(overrides)
    return cfg


def _gram_for(cfg_dict):
    cfg = RunConfig(cfg_dict)
    kernel = build_kernel(cfg.kernel_spec)
    knots = fibonacci_lattice(cfg.n_knots)
    functionals, y = pipeline._load_measurements(cfg, kernel, knots)
    return assemble_gram(kernel, functionals, knots), y, cfg


def test_noiseless_interpolation_selftest(tmp_path):
    # planted lattice spline sampled at 3x knot count: the exact-match run
    # must reproduce the data to 1e-6 relative
    cfg = _scatter_selftest_config(tmp_path / "run")
    manifest = run_reconstruction(cfg)
    assert manifest["converged"]
    G, y, _ = _gram_for(cfg)
    _, coeffs = load_coefficients_csv(manifest["outputs"]["coefficients"])
    resid = np.linalg.norm(G.matvec(coeffs) - y)
    assert resid <= 1e-6 * np.linalg.norm(y)


def test_manifest_objective_matches_recomputation(tmp_path):
    cfg = _scatter_selftest_config(
        tmp_path / "run", **{"cost": {"kind": "l2ball", "rho_rel": 0.01},
                             "lambda": 0.001, "eps_stop": 1e-6,
                             "max_iter": 20000}
    )
    manifest = run_reconstruction(cfg)
    G, y, parsed = _gram_for(cfg)
    _, coeffs = load_coefficients_csv(manifest["outputs"]["coefficients"])
    model = L2Ball(y, parsed.cost["rho_rel"] * np.linalg.norm(y))
    obj = parsed.lam * np.abs(coeffs).sum() + model.finite_value(G.matvec(coeffs))
    assert abs(obj - manifest["final_objective"]) <= 1e-9 * max(abs(obj), 1e-300)


def test_manifest_fields_populated(tmp_path):
    cfg = _scatter_selftest_config(tmp_path / "run", max_iter=200, eps_stop=1e-4)
    manifest = run_reconstruction(cfg)
    data = json.loads(open(manifest["outputs"]["manifest"]).read())
    for key in ("config", "iterations", "converged", "final_objective",
                "residual_norms", "sparsity_count", "wall_time_s",
                "library_version", "rng_seed", "timestamp", "outputs"):
        assert key in data
    assert data["rng_seed"] == 7
    assert data["library_version"].count(".") == 2
    # ISO-8601 with timezone
    assert "T" in data["timestamp"] and data["timestamp"].endswith("+00:00")
    assert data["config"]["lambda"] == cfg["lambda"]


def test_reruns_are_byte_identical(tmp_path):
    cfg_a = _scatter_selftest_config(tmp_path / "a", max_iter=500, eps_stop=1e-4)
    cfg_b = _scatter_selftest_config(tmp_path / "b", max_iter=500, eps_stop=1e-4)
    ma = run_reconstruction(cfg_a)
    mb = run_reconstruction(cfg_b)
    bytes_a = open(ma["outputs"]["coefficients"], "rb").read()
    bytes_b = open(mb["outputs"]["coefficients"], "rb").read()
    assert bytes_a == bytes_b
    trace_a = open(ma["outputs"]["trace"], "rb").read()
    trace_b = open(mb["outputs"]["trace"], "rb").read()
    assert trace_a == trace_b


def test_kl_counts_run(tmp_path):
    cfg = {
        "kernel": {"family": "matern", "beta": 1.5, "epsilon": 0.4},
        "knots": {"fibonacci": 60},
        "sampling": {"synthetic": {"kind": "counts", "bumps": 4,
                                   "amplitude": [0.5, 2.0], "grid": [8, 16],
                                   "rate_scale": 40.0}},
        "cost": {"kind": "kl"},
        "lambda": 0.05,
        "solver": {"kind": "pds"},
        "eps_stop": 1e-7,
        "max_iter": 40000,
        "seed": 3,
        "outputs": {"directory": str(tmp_path / "kl")},
    }
    manifest = run_reconstruction(cfg)
    assert np.isfinite(manifest["final_objective"])
    G, y, _ = _gram_for(cfg)
    _, coeffs = load_coefficients_csv(manifest["outputs"]["coefficients"])
    rates = G.matvec(coeffs)
    # fitted rates nonnegative up to boundary roundoff
    assert rates.min() >= -1e-6 * (1.0 + y.max())


def test_quadratic_baseline_is_dense_gtv_is_sparse(tmp_path):
    scatter = {"synthetic": {"kind": "scatter", "bumps": 5,
                             "amplitude": [0.5, 2.0], "samples": 90,
                             "psnr_db": 25.0}}
    common = {
        "kernel": {"family": "matern", "beta": 2.5, "epsilon": 0.35,
                   "convention": "eq60"},
        "knots": {"fibonacci": 80},
        "sampling": scatter,
        "seed": 11,
    }
    tik = run_reconstruction({
        **common,
        "cost": {"kind": "ls"},
        "solver": {"kind": "tikhonov", "mu": 1e-3},
        "outputs": {"directory": str(tmp_path / "tik")},
    })
    gtv = run_reconstruction({
        **common,
        "cost": {"kind": "l2ball", "rho_rel": 0.05},
        "lambda": 0.01,
        "solver": {"kind": "pds"},
        "eps_stop": 1e-6,
        "max_iter": 40000,
        "outputs": {"directory": str(tmp_path / "gtv")},
    })
    n_samples = 90
    assert tik["sparsity_count"] > 0.9 * n_samples
    assert gtv["sparsity_count"] <= n_samples
    assert gtv["sparsity_count"] < tik["sparsity_count"]


def test_tikhonov_requires_point_samples(tmp_path):
    cfg = {
        "kernel": {"family": "matern", "beta": 1.5, "epsilon": 0.4},
        "knots": {"fibonacci": 30},
        "sampling": {"synthetic": {"kind": "counts", "grid": [4, 8],
                                   "rate_scale": 30.0}},
        "cost": {"kind": "ls"},
        "solver": {"kind": "tikhonov", "mu": 1e-2},
        "seed": 0,
        "outputs": {"directory": str(tmp_path)},
    }
    with pytest.raises(ValueError, match="point samples"):
        run_reconstruction(cfg)


def test_run_writes_optional_raster(tmp_path):
    cfg = _scatter_selftest_config(
        tmp_path / "run", max_iter=300, eps_stop=1e-4,
    )
    cfg["outputs"]["raster"] = {"n_lat": 6, "n_lon": 12, "path": "r.csv"}
    manifest = run_reconstruction(cfg)
    lines = open(manifest["outputs"]["raster"]).read().splitlines()
    assert lines[0] == "lon_deg,lat_deg,value"
    assert len(lines) == 1 + 6 * 12


# ---------------------------------------------------------------- rasters


def test_raster_zero_field(tmp_path):
    kernel = wendland_zonal(3, 1, 0.3)
    field = SplineField(kernel, fibonacci_lattice(20), np.zeros(20))
    path = tmp_path / "z.csv"
    export_raster(field, 4, 8, path)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert rows.shape == (32, 3)
    assert np.all(rows[:, 2] == 0)
    # south-to-north rows, west-to-east columns, cell centres
    assert rows[0, 0] == -180 + 360 / 8 / 2 and rows[0, 1] == -90 + 180 / 4 / 2
    assert rows[-1, 0] == 180 - 360 / 8 / 2 and rows[-1, 1] == 90 - 180 / 4 / 2


def test_raster_peak_near_single_knot(tmp_path):
    kernel = wendland_zonal(3, 1, 0.5)
    knots = fibonacci_lattice(50)
    coeffs = np.zeros(50)
    coeffs[17] = 2.0
    field = SplineField(kernel, knots, coeffs)
    path = tmp_path / "p.csv"
    export_raster(field, 90, 180, path)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    peak = rows[np.argmax(rows[:, 2])]
    lon_k, lat_k = lonlat_from_direction(knots.points[17])
    assert abs(peak[0] - lon_k) <= 2.0 + 1e-9 and abs(peak[1] - lat_k) <= 2.0 + 1e-9
    assert peak[2] <= 2.0 + 1e-12


def test_raster_rejects_degenerate_grid(tmp_path):
    kernel = wendland_zonal(3, 1, 0.3)
    field = SplineField(kernel, fibonacci_lattice(5), np.ones(5))
    with pytest.raises(ValueError, match="n_lat"):
        export_raster(field, 1, 10, tmp_path / "x.csv")
