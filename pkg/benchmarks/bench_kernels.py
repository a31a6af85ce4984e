#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Run from the repository root:

    python benchmarks/bench_kernels.py

The same comparison can be forced package-wide with
RELWAVE_DISABLE_NUMBA=1 in the environment.
"""

import time

import numpy as np

from relwave import FourVector, Grid, decompose, evolve, integrate_trajectory
from relwave import generators as gen
from relwave.kernels import NUMBA_AVAILABLE


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_leapfrog():
    print("=== leapfrog evolution (nx = 2048, 4096 steps) ===")
    grid = Grid.spatial(2048, 0.02, -20.48)
    psi0, psidot0 = gen.gaussian_packet_initial(grid, 0.0, 2.0, 0.5, 1.0)

    def run(use_numba):
        return evolve(psi0, psidot0, steps=4096, dt=0.008, m=1.0,
                      use_numba=use_numba)

    run(True)  # warm the jit cache before timing
    t_numpy = _time(lambda: run(False))
    t_numba = _time(lambda: run(True))
    same = np.max(np.abs(run(True).values - run(False).values))
    print(f"numpy fallback: {t_numpy:.4f} s")
    print(f"numba kernel:   {t_numba:.4f} s   (speedup {t_numpy / t_numba:.2f}x)")
    print(f"max |difference|: {same:.3e}")


def bench_trajectories():
    print("=== trajectory integration (200k RK4 steps) ===")
    grid = Grid.spacetime_1p1(101, 0.02, 201, 0.05, -5.0)
    mp = decompose(gen.plane_wave_field(grid, 0.5, 1.0))
    seed = FourVector.build(1.0, 0.0)

    def run(use_numba):
        return integrate_trajectory(seed, mp, m=1.0, tau_span=0.8, dtau=4e-6,
                                    use_numba=use_numba)

    run(True)
    t_numpy = _time(lambda: run(False), repeats=1)
    t_numba = _time(lambda: run(True))
    a, b = run(True), run(False)
    same = np.max(np.abs(a.position - b.position))
    print(f"numpy fallback: {t_numpy:.4f} s")
    print(f"numba kernel:   {t_numba:.4f} s   (speedup {t_numpy / t_numba:.2f}x)")
    print(f"max |difference|: {same:.3e}")


if __name__ == "__main__":
    print(f"numba available: {NUMBA_AVAILABLE}")
    bench_leapfrog()
    bench_trajectories()
