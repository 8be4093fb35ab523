"""Timing comparison of the jit-compiled kernels against the plain
numpy/scipy fallback.

Run: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from hjdyn import codegen, kernels
from hjdyn.expr import parse


def _time(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_rk4():
    pair = codegen.compile_rhs([parse("p"), parse("-q")], ["q", "p"], "t")
    y0 = np.array([1.0, 0.0])
    nsteps = 200_000
    # warm up the jit compile outside the timed region
    kernels.rk4_integrate(pair, y0, 0.0, 1e-4, 10, use_numba=True)
    t_np = _time(lambda: kernels.rk4_integrate(
        pair, y0, 0.0, 1e-4, nsteps, use_numba=False))
    t_nb = _time(lambda: kernels.rk4_integrate(
        pair, y0, 0.0, 1e-4, nsteps, use_numba=True))
    print(f"rk4  {nsteps} steps: numpy {t_np*1e3:8.1f} ms   "
          f"jit {t_nb*1e3:8.1f} ms   speedup {t_np/t_nb:5.1f}x")


def bench_cn():
    n = 1024
    steps = 2000
    rng = np.random.default_rng(0)
    x = np.linspace(-10, 10, n)
    dx = x[1] - x[0]
    kin = 1.0 / (2 * dx * dx)
    h_diag = 2 * kin + 0.5 * x * x
    h_off = -kin * np.ones(n - 1)
    z = 0.5j * 1e-3
    a_di, a_off = 1.0 + z * h_diag, z * h_off
    b_di, b_off = 1.0 - z * h_diag, -z * h_off
    psi0 = np.exp(-x * x / 2).astype(np.complex128)

    def run(use_numba):
        psi = psi0.copy()
        kernels.cn_evolve(psi, a_off, a_di, a_off, b_off, b_di, b_off,
                          steps, use_numba=use_numba)
        return psi

    run(True)  # warm up
    t_np = _time(lambda: run(False))
    t_nb = _time(lambda: run(True))
    print(f"cn   {steps} steps x {n} grid: numpy {t_np*1e3:8.1f} ms   "
          f"jit {t_nb*1e3:8.1f} ms   speedup {t_np/t_nb:5.1f}x")


if __name__ == "__main__":
    if kernels.NUMBA_DISABLED:
        print("jit disabled via HJDYN_DISABLE_NUMBA; nothing to compare")
    else:
        bench_rk4()
        bench_cn()
