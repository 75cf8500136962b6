"""Tour of the geometric and spectral building blocks.

Builds a Fibonacci knot lattice, measures how densely it covers the sphere,
evaluates the shipped kernel families, and inspects their Legendre spectra:
smoothness of the kernel shows up directly as the decay rate of the series.
"""

import math

import numpy as np

from sphsplines.kernels import matern_zonal, sobolev_green_zonal, wendland_zonal
from sphsplines.sphere import fibonacci_lattice, lonlat_from_direction, nodal_width


def main():
    for n in (100, 400, 1600):
        lattice = fibonacci_lattice(n)
        width = nodal_width(lattice, probe_resolution=20000)
        print("fibonacci %5d knots: nodal width %.4f (%.4f * sqrt(1/N))"
              % (n, width, width * math.sqrt(n)))
    lon, lat = lonlat_from_direction(fibonacci_lattice(5).points)
    print("first 5-point lattice (lon, lat):")
    for pair in zip(lon, lat):
        print("  %+8.2f %+7.2f" % pair)

    kernels = [
        ("matern beta=2.5", matern_zonal(2.5, 0.2)),
        ("wendland (3,1)", wendland_zonal(3, 1, 0.6)),
        ("sobolev green beta=2", sobolev_green_zonal(2.0)),
    ]
    t = np.array([1.0, 0.95, 0.8, 0.0, -1.0])
    print("\nkernel values at cos(angle) = %s" % t.tolist())
    for name, kern in kernels:
        print("  %-18s %s" % (name, np.round(kern(t), 4).tolist()))

    print("\nLegendre spectrum decay (log-log slope over degrees 16..256):")
    for name, kern in kernels[:2]:
        series = kern.series(n_max=512)
        n = np.arange(16, 257)
        slope = np.polyfit(np.log(n), np.log(series.coeffs[16:257]), 1)[0]
        print("  %-18s slope %.2f (smoothness beta=%.1f predicts about %.1f)"
              % (name, slope, kern.beta, -2 * kern.beta))


if __name__ == "__main__":
    main()
