"""Total differential equations of motion: symbolic derivation, fixed-step
RK4 integration in the physical time, canonical action accumulation, and
the gauge-independence comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import codegen, kernels
from .expr import (
    Const, Expr, Sym, ZERO, differentiate, evaluate, free_functions,
    free_symbols, parse, simplify, substitute, substitute_functions,
    to_string,
)
from .hjpde import HJPDESet
from .legendre import AnalysisError


class SimulationError(Exception):
    pass


@dataclass
class PhaseState:
    values: dict            # symbol name -> value (parameters, q, p)
    action: float = 0.0


@dataclass
class EquationsOfMotion:
    hj: HJPDESet
    parameter: str                   # evolution coordinate (t or q0)
    state_names: list                # integrated symbols, action slot last
    rhs: dict                        # name -> Expr (d name / d parameter)
    action_rhs: Expr
    constraint_exprs: list           # H'_alpha as Expr over state symbols

    @property
    def q_symbols(self):
        return self.hj.q_symbols

    @property
    def p_symbols(self):
        return self.hj.p_symbols


@dataclass
class Trajectory:
    parameter: str
    names: list                       # state columns (q, p, p_alpha, Z)
    params: np.ndarray                # evolution parameter samples
    data: np.ndarray                  # (nsamples, len(names))
    dt: float
    system_id: str
    residuals: np.ndarray             # max |H'_alpha| per sample

    def column(self, name):
        return self.data[:, self.names.index(name)]

    def state(self, index):
        values = {n: float(self.data[index, i])
                  for i, n in enumerate(self.names) if n != "Z"}
        values[self.parameter] = float(self.params[index])
        return PhaseState(values, float(self.data[index, -1]))

    @property
    def final_state(self):
        return self.state(len(self.params) - 1)


def derive_eom(hj, parameter=None, require_vanishing=True):
    """Symbolic right-hand sides d(state)/d(parameter) from the constraint
    whose coordinate is the evolution parameter.

    The remaining flow directions carry the weakly vanishing H_0, so their
    coefficients vanish and the physical time is the sole effective
    parameter; require_vanishing enforces that verdict.
    """
    if not hj.constraints:
        raise AnalysisError("system has no constraints; use the canonical "
                            "Hamiltonian directly")
    if require_vanishing and not hj.vanishing.is_zero:
        raise SimulationError(
            "canonical Hamiltonian does not vanish weakly; the total "
            "differential equations are not parameter-free "
            f"({hj.vanishing.describe()})")
    if parameter is None:
        parameter = hj.constraints[0].coordinate
    gen = hj.constraint(next(c.label for c in hj.constraints
                             if c.coordinate == parameter))
    h = gen.h
    positive = hj.system.positive
    rhs = {}
    for q, p in zip(hj.q_symbols, hj.p_symbols):
        rhs[q] = simplify(differentiate(h, p), positive)
        rhs[p] = simplify(Const(-1) * differentiate(h, q), positive)
    for c in hj.constraints:
        rhs[c.momentum] = simplify(Const(-1) * differentiate(h, c.coordinate),
                                   positive)
    action = Const(-1) * h
    for q, p in zip(hj.q_symbols, hj.p_symbols):
        action = action + Sym(p) * differentiate(h, p)
    action_rhs = simplify(action, positive)
    state_names = list(hj.q_symbols) + list(hj.p_symbols) + \
        [c.momentum for c in hj.constraints]
    constraint_exprs = [c.hprime for c in hj.constraints]
    return EquationsOfMotion(hj, parameter, state_names + ["Z"], rhs,
                             action_rhs, constraint_exprs)


def _concretize(eom, exprs):
    funcs = eom.hj.system.concrete_functions()
    out = []
    for e in exprs:
        c = substitute_functions(e, funcs)
        missing = free_functions(c)
        if missing:
            raise SimulationError(
                f"simulation needs concrete definitions for {sorted(missing)}")
        out.append(simplify(c, eom.hj.system.positive))
    return out


def initial_state(eom, initial):
    """Complete user-provided q/p values: constrained momenta are seeded on
    the surface (p_alpha = -H_alpha) and the action starts at zero."""
    hj = eom.hj
    values = dict(initial)
    b = {k: float(v) for k, v in values.items()}
    b.setdefault(eom.parameter, 0.0)
    for q in hj.q_symbols + hj.p_symbols:
        if q not in b:
            raise SimulationError(f"initial value for {q!r} missing")
    funcs = hj.system.concrete_functions()
    for c in hj.constraints:
        if c.momentum not in b:
            h = substitute_functions(c.h, funcs)
            missing = free_functions(h)
            if missing:
                raise SimulationError(
                    f"cannot seed {c.momentum}: no concrete definition for "
                    f"{sorted(missing)}")
            b[c.momentum] = -evaluate(h, b)
    return b


def integrate(eom, initial, t_span, dt, use_numba=None):
    """Fixed-step RK4 over the evolution parameter, action accumulated
    alongside; constraint residuals recorded at every sample."""
    if dt <= 0:
        raise SimulationError("step must be positive")
    t0, t1 = t_span
    if t1 <= t0:
        raise SimulationError("empty or reversed parameter span")
    b = initial_state(eom, initial)
    names = eom.state_names[:-1]
    exprs = _concretize(eom, [eom.rhs[n] for n in names] + [eom.action_rhs])
    rhs_pair = codegen.compile_rhs(exprs, names + ["Z"], eom.parameter)
    # uniform step hitting t1 exactly; dt is adjusted by at most half a step
    nsteps = max(1, int(round((t1 - t0) / dt)))
    dt = (t1 - t0) / nsteps
    y0 = np.array([b[n] for n in names] + [b.get("Z", 0.0)])
    data = kernels.rk4_integrate(rhs_pair, y0, t0, dt, nsteps,
                                 use_numba=use_numba)
    params = t0 + dt * np.arange(nsteps + 1)
    cexprs = _concretize(eom, eom.constraint_exprs)
    cfn = codegen.compile_columns(cexprs, names + ["Z"], eom.parameter)
    residuals = np.abs(cfn(params, data)).max(axis=0)
    return Trajectory(eom.parameter, names + ["Z"], params, data, dt,
                      eom.hj.system.system_id, residuals)


def action_along(traj):
    """Accumulated canonical action Z over the trajectory."""
    return float(traj.data[-1, -1] - traj.data[0, -1])


# ---------------------------------------------------------------------------
# gauge independence

@dataclass
class GaugeComparison:
    parametrizations: list      # DSL strings t(tau)
    t_grid: np.ndarray
    deviations: dict            # state name -> max abs deviation vs first
    max_deviation: float


def gauge_independence_check(eom, reparametrizations, initial, t_span, dt,
                             grid_points=201, use_numba=None):
    """Integrate in tau under each monotone parametrization t(tau), resample
    q(t) (and p(t)) on a common physical-time grid, report max deviation.

    reparametrizations are DSL strings in the symbol `tau`, e.g.
    "tau + tau^3/10".  Each must have dt/dtau > 0 over the run.
    """
    t0, t1 = t_span
    names = eom.state_names[:-1]
    base_exprs = _concretize(eom, [eom.rhs[n] for n in names]
                             + [eom.action_rhs])
    results = []
    for spec in reparametrizations:
        f = parse(spec)
        if free_symbols(f) - {"tau"}:
            raise SimulationError(
                f"parametrization {spec!r} must depend only on tau")
        fp = differentiate(f, "tau")
        tau0, tau1 = _invert(f, t0), _invert(f, t1)
        taus = np.linspace(tau0, tau1, 50)
        fp_vals = [evaluate(fp, {"tau": tv}) for tv in taus]
        if min(fp_vals) <= 0:
            raise SimulationError(
                f"parametrization {spec!r} is not strictly monotone "
                "(dt/dtau <= 0)")
        # rhs in tau: chain rule, physical time replaced by t(tau)
        sub = {eom.parameter: f}
        tau_exprs = [simplify(substitute(e, sub) * fp,
                              eom.hj.system.positive) for e in base_exprs]
        rhs_pair = codegen.compile_rhs(tau_exprs, names + ["Z"], "tau")
        b = initial_state(eom, initial)
        nsteps = int(round((tau1 - tau0) / dt))
        y0 = np.array([b[n] for n in names] + [0.0])
        data = kernels.rk4_integrate(rhs_pair, y0, tau0, dt, nsteps,
                                     use_numba=use_numba)
        tau_grid = tau0 + dt * np.arange(nsteps + 1)
        t_vals = np.array([evaluate(f, {"tau": tv}) for tv in tau_grid])
        results.append((t_vals, data))
    pad = 1e-9 * (t1 - t0)
    t_grid = np.linspace(t0 + pad, t1 - pad, grid_points)
    resampled = []
    for t_vals, data in results:
        cols = {}
        for i, n in enumerate(names):
            cols[n] = CubicSpline(t_vals, data[:, i])(t_grid)
        resampled.append(cols)
    deviations = {}
    for n in names:
        dev = 0.0
        for cols in resampled[1:]:
            dev = max(dev, float(np.abs(cols[n] - resampled[0][n]).max()))
        deviations[n] = dev
    return GaugeComparison(list(reparametrizations), t_grid, deviations,
                           max(deviations.values()))


def _invert(f, target, lo=-1e6, hi=1e6):
    g = lambda tau: evaluate(f, {"tau": tau}) - target
    a, b = -1.0, 1.0
    for _ in range(200):
        if g(a) * g(b) <= 0:
            return brentq(g, a, b, xtol=1e-14, rtol=1e-15)
        a *= 2.0
        b *= 2.0
        if a < lo or b > hi:
            break
    raise SimulationError("could not invert parametrization")
