"""Time the RK4 shooting kernels under the numba and pure-numpy backends.

    python3 benchmarks/bench_kernels.py [--steps-per-year N] [--repeat R]

The numpy side runs 31-probe multisection (its vectorised kernel amortises
Python overhead across probes); numba runs plain bisection.
"""

import argparse
import time

import numpy as np

from priceimpact import _accel, calibrated_params
from priceimpact.solver import Mesh, kernel_coefficients, shoot_h0
from priceimpact import kernels


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps-per-year", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    p = calibrated_params(5.0, 0.002)
    mesh = Mesh.for_horizon(p.T, args.steps_per_year)
    coef = kernel_coefficients(p)
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    if "numba" in backends:
        # compile outside the timed region
        kernels.hfg_terminal(np.array([1.0]), 10, 0.1, coef, backend="numba")
        kernels.full_trajectory(1.0, 10, 0.1, coef, backend="numba")

    print(f"mesh: {mesh.n} steps, dt={mesh.dt:g}")
    print(f"{'backend':<8} {'shoot [s]':>10} {'full traj [s]':>14} {'h0_hat':>20}")
    results = {}
    for b in backends:
        t_shoot, (h0, _, _) = best_of(lambda: shoot_h0(p, mesh, backend=b), args.repeat)
        t_full, _ = best_of(lambda: kernels.full_trajectory(h0, mesh.n, mesh.dt, coef, backend=b),
                            args.repeat)
        results[b] = (t_shoot, t_full, h0)
        print(f"{b:<8} {t_shoot:>10.4f} {t_full:>14.4f} {h0:>20.12g}")
    if len(results) == 2:
        sp = results["numpy"][0] / results["numba"][0]
        sf = results["numpy"][1] / results["numba"][1]
        rel = abs(results["numpy"][2] - results["numba"][2]) / results["numba"][2]
        print(f"speedup: shooting x{sp:.1f}, full trajectory x{sf:.1f}; h0 rel diff {rel:.2e}")
    if not _accel.HAVE_NUMBA:
        print("numba disabled (PRICEIMPACT_NO_NUMBA set or numba missing)")


if __name__ == "__main__":
    main()
