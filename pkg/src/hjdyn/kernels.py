"""Hot numeric kernels: fixed-step RK4 driver and Crank-Nicolson stepping.

Each kernel exists twice: a numba @njit version (default when numba imports)
and a pure numpy/scipy fallback.  Set HJDYN_DISABLE_NUMBA=1 to force the
fallback; benchmarks/bench_kernels.py compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import solve_banded

NUMBA_DISABLED = os.environ.get("HJDYN_DISABLE_NUMBA", "") not in ("", "0")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by HJDYN_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - environment dependent
    njit = None
    NUMBA_ENABLED = False


# ---------------------------------------------------------------------------
# RK4

def _rk4_loop(rhs, y0, t0, dt, nsteps, out):
    n = y0.shape[0]
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    out[0] = y
    t = t0
    for i in range(nsteps):
        rhs(t, y, k1)
        rhs(t + 0.5 * dt, y + 0.5 * dt * k1, k2)
        rhs(t + 0.5 * dt, y + 0.5 * dt * k2, k3)
        rhs(t + dt, y + dt * k3, k4)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (i + 1) * dt
        out[i + 1] = y


rk4_numpy = _rk4_loop
rk4_numba = njit(cache=False)(_rk4_loop) if NUMBA_ENABLED else None


def rk4_integrate(rhs_pair, y0, t0, dt, nsteps, use_numba=None):
    """Integrate with classical RK4 on a fixed grid.

    rhs_pair is (python_rhs, numba_rhs_or_None) as produced by
    codegen.compile_rhs.  Returns an (nsteps+1, len(y0)) array of states.
    """
    if use_numba is None:
        use_numba = NUMBA_ENABLED
    py_rhs, nb_rhs = rhs_pair
    out = np.empty((nsteps + 1, len(y0)))
    y0 = np.asarray(y0, dtype=float)
    if use_numba and NUMBA_ENABLED and nb_rhs is not None:
        rk4_numba(nb_rhs, y0, t0, dt, nsteps, out)
    else:
        rk4_numpy(py_rhs, y0, t0, dt, nsteps, out)
    return out


# ---------------------------------------------------------------------------
# Crank-Nicolson stepping (complex tridiagonal systems)

def _cn_loop(psi, a_lo, a_di, a_up, b_lo, b_di, b_up, nsteps):
    """In-place Crank-Nicolson: solve A psi_{n+1} = B psi_n, nsteps times.

    a_lo/a_di/a_up are the sub/main/super diagonals of A (lengths n-1, n,
    n-1), likewise for B.  Thomas algorithm, one sweep per step.
    """
    n = psi.shape[0]
    rhs = np.empty(n, dtype=np.complex128)
    cp = np.empty(n - 1, dtype=np.complex128)
    dp = np.empty(n, dtype=np.complex128)
    for _ in range(nsteps):
        rhs[0] = b_di[0] * psi[0] + b_up[0] * psi[1]
        for i in range(1, n - 1):
            rhs[i] = b_lo[i - 1] * psi[i - 1] + b_di[i] * psi[i] \
                + b_up[i] * psi[i + 1]
        rhs[n - 1] = b_lo[n - 2] * psi[n - 2] + b_di[n - 1] * psi[n - 1]
        # Thomas forward sweep
        cp[0] = a_up[0] / a_di[0]
        dp[0] = rhs[0] / a_di[0]
        for i in range(1, n - 1):
            m = a_di[i] - a_lo[i - 1] * cp[i - 1]
            cp[i] = a_up[i] / m
            dp[i] = (rhs[i] - a_lo[i - 1] * dp[i - 1]) / m
        m = a_di[n - 1] - a_lo[n - 2] * cp[n - 2]
        dp[n - 1] = (rhs[n - 1] - a_lo[n - 2] * dp[n - 2]) / m
        # back substitution
        psi[n - 1] = dp[n - 1]
        for i in range(n - 2, -1, -1):
            psi[i] = dp[i] - cp[i] * psi[i + 1]


cn_numba = njit(cache=False)(_cn_loop) if NUMBA_ENABLED else None


def cn_numpy(psi, a_lo, a_di, a_up, b_lo, b_di, b_up, nsteps):
    """Fallback: vectorized B-multiply plus LAPACK banded solve per step."""
    n = psi.shape[0]
    ab = np.zeros((3, n), dtype=np.complex128)
    ab[0, 1:] = a_up
    ab[1, :] = a_di
    ab[2, :-1] = a_lo
    for _ in range(nsteps):
        rhs = b_di * psi
        rhs[:-1] += b_up * psi[1:]
        rhs[1:] += b_lo * psi[:-1]
        psi[:] = solve_banded((1, 1), ab, rhs)


def cn_evolve(psi, a_lo, a_di, a_up, b_lo, b_di, b_up, nsteps, use_numba=None):
    if use_numba is None:
        use_numba = NUMBA_ENABLED
    if use_numba and NUMBA_ENABLED:
        cn_numba(psi, a_lo, a_di, a_up, b_lo, b_di, b_up, nsteps)
    else:
        cn_numpy(psi, a_lo, a_di, a_up, b_lo, b_di, b_up, nsteps)
    return psi
