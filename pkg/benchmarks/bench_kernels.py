"""Compare the compiled and pure-Python Euler-Maruyama kernels.

Run: python benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""

import argparse
import math
import time

import numpy as np

from dcsl import langevin
from dcsl.coefficients import CollapseCoefficients
from dcsl.spectra import MechanicalConfig


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()

    w0 = 2 * math.pi * 100.0
    mech = MechanicalConfig(1e-11, w0, w0 / 100.0, 4.2)
    coeffs = CollapseCoefficients(0.0, 0.0, 0.0, (1.0, 0.0, 0.0), mech.m)
    dt = 1.0 / (50.0 * w0)
    duration = max(a.steps * dt, 200 * 2 * math.pi / w0)
    steps = int(math.ceil(duration / dt))

    results = {}
    for backend in langevin.available_backends():
        t, tr = best_of(lambda: langevin.simulate(mech, coeffs, duration, dt, 1, backend=backend), a.repeat)
        results[backend] = (t, tr)
        print(f"{backend:>7}: {steps} steps in {t:.4f} s ({steps / t / 1e6:.2f} Msteps/s, noise generation included)")

    if "cython" in results:
        same = np.array_equal(results["cython"][1].x, results["python"][1].x)
        print(f"speedup: {results['python'][0] / results['cython'][0]:.1f}x, bit-identical: {same}")

    # kernel only, noise pre-drawn
    nx = np.random.default_rng(0).standard_normal(steps) * 1e-15
    npn = np.random.default_rng(1).standard_normal(steps) * 1e-20
    for backend in langevin.available_backends():
        kern = langevin._kernel(backend)
        x = np.zeros(steps + 1)
        p = np.zeros(steps + 1)
        t, _ = best_of(lambda: kern(x, p, nx, npn, 0.99, 1e-5, -1e-5, 0.99, 0.0, 0.0, 1.0, 1.0), a.repeat)
        print(f"{backend:>7} kernel only: {t:.4f} s")


if __name__ == "__main__":
    main()
