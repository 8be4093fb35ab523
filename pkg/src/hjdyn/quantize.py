"""Operator quantization of 1D constraint systems on a spatial grid.

The constraint H' psi = 0 with p_t -> -i d/dt becomes i dpsi/dt = H psi
(hbar = 1).  Two operator shapes are supported: p^2/2 + V(q) evolved by
Crank-Nicolson (Dirichlet grid, tridiagonal solve per step), and the
relativistic free dispersion sqrt(p^2 + m^2 c^2) evolved spectrally
(exact phase multiplication in momentum space, periodic grid).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .expr import (
    Const, Expr, ExprError, Sym, ZERO, evaluate, free_functions,
    free_symbols, simplify, substitute_functions, to_string,
)


class OperatorShapeError(ExprError):
    """H_t does not match a supported quantizable shape."""


class BoundaryContaminationWarning(UserWarning):
    pass


class NormalizationError(ValueError):
    pass


DEFAULT_GRID = 1024
DEFAULT_DOMAIN = (-10.0, 10.0)
DEFAULT_DT = 1e-3


@dataclass
class Wavefunction:
    x: np.ndarray
    psi: np.ndarray
    t: float = 0.0
    boundary: str = "dirichlet"   # or "periodic"

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    @property
    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2) * self.dx))

    def normalized(self):
        return replace(self, psi=self.psi / self.norm)

    @property
    def density(self):
        return np.abs(self.psi) ** 2


def gaussian_packet(center=0.0, width=1.0, k=0.0, grid=DEFAULT_GRID,
                    domain=DEFAULT_DOMAIN, boundary="dirichlet"):
    x = grid_points(grid, domain, boundary)
    psi = np.exp(-((x - center) ** 2) / (2.0 * width ** 2) + 1j * k * x)
    wf = Wavefunction(x, psi.astype(np.complex128), 0.0, boundary)
    return wf.normalized()


def plane_mode(mode, grid=DEFAULT_GRID, domain=DEFAULT_DOMAIN):
    """Periodic plane wave e^{ikx} with k commensurate with the box."""
    x = grid_points(grid, domain, "periodic")
    length = domain[1] - domain[0]
    k = 2.0 * math.pi * mode / length
    psi = np.exp(1j * k * x) / math.sqrt(length)
    return Wavefunction(x, psi.astype(np.complex128), 0.0, "periodic"), k


def grid_points(grid, domain, boundary):
    if boundary == "periodic":
        return domain[0] + (domain[1] - domain[0]) / grid * np.arange(grid)
    return np.linspace(domain[0], domain[1], grid)


@dataclass
class HamiltonianOperator:
    kind: str                  # "potential" | "relativistic-free"
    grid: int
    domain: tuple
    v_values: np.ndarray | None = None   # potential on the grid
    m: float = 1.0
    c: float = 1.0

    def apply(self, wf):
        """H acting on a wavefunction (used for <H> and hermiticity)."""
        psi = wf.psi
        dx = wf.dx
        if self.kind == "potential":
            out = np.empty_like(psi)
            out[1:-1] = -(psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / (2 * dx * dx)
            out[0] = -(psi[1] - 2.0 * psi[0]) / (2 * dx * dx)
            out[-1] = -(psi[-2] - 2.0 * psi[-1]) / (2 * dx * dx)
            return out + self.v_values * psi
        k = 2.0 * math.pi * np.fft.fftfreq(psi.size, d=dx)
        omega = np.sqrt(k * k + self.m ** 2 * self.c ** 2)
        return np.fft.ifft(omega * np.fft.fft(psi))

    def dispersion(self, k):
        if self.kind != "relativistic-free":
            raise OperatorShapeError("dispersion only for the relativistic kind")
        return math.sqrt(k * k + self.m ** 2 * self.c ** 2)


def build_operator(h_t, q_symbol="q", p_symbol="p_q", grid=DEFAULT_GRID,
                   domain=DEFAULT_DOMAIN, functions=None, parameters=None):
    """Discretize H_t.  Supported shapes: p^2/2 + V(q) and
    sqrt(p^2 + m^2 c^2); anything else (notably a square root containing
    coordinates, the charged-particle case) is rejected."""
    functions = functions or {}
    parameters = dict(parameters or {})
    h = simplify(substitute_functions(h_t, functions))
    if free_functions(h):
        raise OperatorShapeError(
            f"no concrete definition for {sorted(free_functions(h))}")
    rel = _match_relativistic(h, p_symbol, parameters)
    if rel is not None:
        m, c = rel
        return HamiltonianOperator("relativistic-free", grid, domain,
                                   m=m, c=c)
    v = _match_potential(h, q_symbol, p_symbol)
    if v is not None:
        x = grid_points(grid, domain, "dirichlet")
        vv = np.array([evaluate(v, dict(parameters, **{q_symbol: xi}))
                       for xi in x])
        return HamiltonianOperator("potential", grid, domain, v_values=vv)
    raise OperatorShapeError(
        f"unsupported operator shape: {to_string(h)} (square roots of "
        "coordinate-dependent operators are ordering-ambiguous)")


def _match_relativistic(h, p_symbol, parameters):
    if h.kind != "sqrt":
        return None
    inner = h.args[0]
    rest = simplify(inner - Sym(p_symbol) ** 2, expand=True)
    if p_symbol in free_symbols(rest):
        return None
    if free_symbols(rest) - set(parameters):
        return None
    mc2 = evaluate(rest, parameters)
    if mc2 <= 0:
        raise OperatorShapeError("mass term must be positive")
    m = float(parameters.get("m", math.sqrt(mc2)))
    c = math.sqrt(mc2) / m
    return m, c


def _match_potential(h, q_symbol, p_symbol):
    kin = Sym(p_symbol) ** 2 / 2
    v = simplify(h - kin, expand=True)
    if p_symbol in free_symbols(v):
        return None
    return v


def _check_support(wf):
    n = wf.psi.size
    edge = max(1, n // 10)
    amp = np.abs(wf.psi)
    if amp[:edge].max() > 1e-12 or amp[-edge:].max() > 1e-12:
        warnings.warn(
            "wavepacket has support in the outer 10% of a Dirichlet grid",
            BoundaryContaminationWarning, stacklevel=3)


def evolve(wf, op, dt, steps, use_numba=None):
    """Advance the wavefunction: Crank-Nicolson for the potential kind,
    exact spectral phases for the relativistic kind.  Both are unitary."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if op.kind == "relativistic-free":
        if wf.boundary != "periodic":
            raise ValueError("spectral evolution needs a periodic grid")
        k = 2.0 * math.pi * np.fft.fftfreq(wf.psi.size, d=wf.dx)
        omega = np.sqrt(k * k + op.m ** 2 * op.c ** 2)
        phase = np.exp(-1j * omega * dt * steps)
        psi = np.fft.ifft(phase * np.fft.fft(wf.psi))
        return Wavefunction(wf.x, psi, wf.t + dt * steps, wf.boundary)
    if wf.boundary != "dirichlet":
        raise ValueError("Crank-Nicolson evolution needs a Dirichlet grid")
    _check_support(wf)
    n = wf.psi.size
    dx = wf.dx
    kin = 1.0 / (2 * dx * dx)
    h_diag = 2 * kin + op.v_values
    h_off = -kin * np.ones(n - 1)
    z = 0.5j * dt
    a_di = 1.0 + z * h_diag
    a_off = z * h_off
    b_di = 1.0 - z * h_diag
    b_off = -z * h_off
    psi = wf.psi.astype(np.complex128).copy()
    kernels.cn_evolve(psi, a_off, a_di, a_off, b_off, b_di, b_off, steps,
                      use_numba=use_numba)
    out = Wavefunction(wf.x, psi, wf.t + dt * steps, wf.boundary)
    _check_support(out)
    return out


def expectations(wf, op=None, norm_tol=1e-6):
    """(<q>, <p>, <H>) by grid quadrature; requires a normalized state."""
    if abs(wf.norm - 1.0) > norm_tol:
        raise NormalizationError(f"state norm {wf.norm} is not 1")
    dx = wf.dx
    dens = wf.density
    q_exp = float(np.sum(dens * wf.x) * dx)
    dpsi = np.gradient(wf.psi, dx)
    p_exp = float(np.sum(np.imag(np.conj(wf.psi) * dpsi)) * dx)
    h_exp = None
    if op is not None:
        h_exp = float(np.real(np.sum(np.conj(wf.psi) * op.apply(wf)) * dx))
    return q_exp, p_exp, h_exp


def hermiticity_defect(op, rng, trials=5):
    """max |<H u, v> - <u, H v>| over random grid vectors (unit norm)."""
    x = grid_points(op.grid, op.domain,
                    "periodic" if op.kind == "relativistic-free" else "dirichlet")
    dx = float(x[1] - x[0])
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(op.grid) + 1j * rng.standard_normal(op.grid)
        v = rng.standard_normal(op.grid) + 1j * rng.standard_normal(op.grid)
        u /= np.sqrt(np.sum(np.abs(u) ** 2) * dx)
        v /= np.sqrt(np.sum(np.abs(v) ** 2) * dx)
        wu = Wavefunction(x, u, 0.0, "periodic" if op.kind != "potential"
                          else "dirichlet")
        wv = replace(wu, psi=v)
        lhs = np.sum(np.conj(op.apply(wu)) * v) * dx
        rhs = np.sum(np.conj(u) * op.apply(wv)) * dx
        worst = max(worst, abs(lhs - rhs))
    return worst


def oscillator_ground_state(grid=DEFAULT_GRID, domain=DEFAULT_DOMAIN):
    """Analytic ground state exp(-q^2/2) of p^2/2 + q^2/2, normalized on
    the grid."""
    x = grid_points(grid, domain, "dirichlet")
    psi = np.exp(-x * x / 2.0).astype(np.complex128)
    return Wavefunction(x, psi, 0.0, "dirichlet").normalized()


def ground_state(op):
    """Lowest eigenvector of the discretized potential-kind Hamiltonian.

    This is the state that is exactly stationary under Crank-Nicolson
    evolution; the analytic continuum eigenfunction differs from it at the
    O(dx^2) level of the second-difference stencil.
    """
    from scipy.linalg import eigh_tridiagonal
    if op.kind != "potential":
        raise OperatorShapeError("ground_state needs a potential operator")
    x = grid_points(op.grid, op.domain, "dirichlet")
    dx = float(x[1] - x[0])
    kin = 1.0 / (2 * dx * dx)
    vals, vecs = eigh_tridiagonal(2 * kin + op.v_values,
                                  -kin * np.ones(op.grid - 1),
                                  select="i", select_range=(0, 0))
    psi = vecs[:, 0].astype(np.complex128)
    if psi[op.grid // 2].real < 0:
        psi = -psi
    wf = Wavefunction(x, psi, 0.0, "dirichlet").normalized()
    return wf, float(vals[0])
