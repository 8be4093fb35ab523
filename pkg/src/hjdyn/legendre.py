"""Lagrangian analysis: momenta, Hessian rank, velocity inversion and the
time-parametrization transform that manufactures singular systems."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr, svdvals

from .expr import (
    Const, DomainError, EvalError, Expr, ExprError, Mul, Pow, Sym, ZERO,
    default_seed, differentiate, evaluate, free_symbols, is_zero, parse,
    probe_bindings, simplify, substitute, to_string,
)


class AnalysisError(ExprError):
    pass


class RankInstabilityError(AnalysisError):
    """Hessian rank differs between sample points."""


class InversionUnsupportedError(AnalysisError):
    """Momenta are not affine in the solvable velocities and no template
    closed form is registered."""


class SingularInputError(AnalysisError):
    pass


def momentum_symbol(coordinate):
    m = re.fullmatch(r"q_?(\d+)", coordinate)
    if m:
        return "p_" + m.group(1)
    return "p_" + coordinate


def constraint_label(coordinate):
    m = re.fullmatch(r"q_?(\d+)", coordinate)
    if m:
        return m.group(1)
    return coordinate


@dataclass
class LagrangianSystem:
    coordinates: list
    velocities: list
    lagrangian: Expr
    positive: set = field(default_factory=set)
    parameters: dict = field(default_factory=dict)  # name -> default value
    functions: dict = field(default_factory=dict)   # name -> (var, Expr) | None
    template: str | None = None
    system_id: str = "custom"
    # analysis results
    rank: int | None = None
    momenta: list | None = None          # [(momentum symbol, Expr)]
    solved_velocities: dict | None = None  # velocity symbol -> Expr
    # template-provided closed forms
    closed_form_w: dict | None = None      # velocity symbol -> Expr
    closed_form_h: dict | None = None      # coordinate -> H_alpha Expr

    def __post_init__(self):
        if len(self.coordinates) != len(self.velocities):
            raise AnalysisError("coordinate/velocity lists differ in length")

    @property
    def momentum_symbols(self):
        return [momentum_symbol(c) for c in self.coordinates]

    def concrete_functions(self):
        return {n: d for n, d in self.functions.items() if d is not None}

    def velocity_of(self, coordinate):
        return self.velocities[self.coordinates.index(coordinate)]


@dataclass
class HessianReport:
    matrix: list                   # 2-D list of Expr
    numeric_rank: int
    sample_points: list            # list of bindings dicts
    singular_directions: np.ndarray  # rows span the numeric null space


_RANK_TOL = 1e-9


def conjugate_momenta(sys):
    """p_mu = dL/d(velocity_mu), one per coordinate, simplified."""
    out = []
    for coord, vel in zip(sys.coordinates, sys.velocities):
        p = simplify(differentiate(sys.lagrangian, vel), sys.positive)
        out.append((momentum_symbol(coord), p))
    sys.momenta = out
    return out


def _numeric_matrix(matrix, bindings, funcs):
    n = len(matrix)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = evaluate(matrix[i][j], bindings, funcs)
    return out


def hessian(sys, samples=5, seed=None):
    """Hessian of L in the velocities with numeric rank via SVD thresholding.

    The rank must agree across sample points; the supported systems all have
    configuration-independent singularity structure.
    """
    vels = sys.velocities
    matrix = [[simplify(differentiate(differentiate(sys.lagrangian, vi), vj),
                        sys.positive)
               for vj in vels] for vi in vels]
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    flat = [e for row in matrix for e in row] + [sys.lagrangian]
    positive = set(sys.positive)
    funcs = sys.concrete_functions()
    params = {k: float(v) for k, v in sys.parameters.items()}
    ranks = []
    points = []
    null_basis = None
    for _ in range(samples):
        b, fd, _ = probe_bindings(flat, rng, positive, funcs)
        b.update(params)
        try:
            m = _numeric_matrix(matrix, b, fd)
        except DomainError:
            m = None
        if m is None:
            b, fd, _ = probe_bindings(flat, rng, positive, funcs)
            m = _numeric_matrix(matrix, b, fd)
        sv = svdvals(m)
        smax = sv.max(initial=0.0)
        rank = int(np.sum(sv > _RANK_TOL * max(smax, 1.0)))
        ranks.append(rank)
        points.append(b)
        _, _, vt = np.linalg.svd(m)
        null_basis = vt[rank:]
    if len(set(ranks)) > 1:
        raise RankInstabilityError(
            f"Hessian rank varies across sample points: {ranks}")
    sys.rank = ranks[0]
    return HessianReport(matrix, ranks[0], points, null_basis)


def _pivot_columns(sys, report):
    """Choose rank-many velocity columns forming a nonsingular block."""
    b = dict(report.sample_points[0])
    funcs = sys.concrete_functions()
    rng = np.random.default_rng(default_seed())
    flat = [e for row in report.matrix for e in row]
    bb, fd, _ = probe_bindings(flat, rng, sys.positive, funcs)
    bb.update({k: float(v) for k, v in sys.parameters.items()})
    m = _numeric_matrix(report.matrix, bb, fd)
    _, _, piv = qr(m, pivoting=True)
    return sorted(piv[:report.numeric_rank])


def _symbolic_linear_solve(jac, rhs, positive):
    """Gaussian elimination over expressions for a small linear system."""
    n = len(rhs)
    a = [row[:] for row in jac]
    r = rhs[:]
    perm = list(range(n))
    for col in range(n):
        pivot_row = None
        for row in range(col, n):
            if simplify(a[row][col], positive) != ZERO:
                pivot_row = row
                if a[row][col].kind == "const":
                    break
        if pivot_row is None:
            raise InversionUnsupportedError("singular velocity Jacobian block")
        a[col], a[pivot_row] = a[pivot_row], a[col]
        r[col], r[pivot_row] = r[pivot_row], r[col]
        piv = a[col][col]
        for row in range(col + 1, n):
            f = simplify(Mul(a[row][col], Pow(piv, Const(-1))), positive)
            if f == ZERO:
                continue
            for j in range(col, n):
                a[row][j] = simplify(a[row][j] - f * a[col][j], positive,
                                     expand=True)
            r[row] = simplify(r[row] - f * r[col], positive, expand=True)
    x = [ZERO] * n
    for row in range(n - 1, -1, -1):
        acc = r[row]
        for j in range(row + 1, n):
            acc = acc - a[row][j] * x[j]
        x[row] = simplify(Mul(acc, Pow(a[row][row], Const(-1))), positive,
                          expand=True)
    return x


def solve_velocities(sys, seed=None, verify=True):
    """Express the solvable velocities in terms of momenta (Legendre
    inversion).  Uses a template closed form when registered, otherwise a
    symbolic linear solve of the momentum definitions."""
    if sys.momenta is None:
        conjugate_momenta(sys)
    report = None
    if sys.rank is None:
        report = hessian(sys, seed=seed)
    if sys.closed_form_w is not None:
        solved = dict(sys.closed_form_w)
    else:
        if report is None:
            report = hessian(sys, seed=seed)
        cols = _pivot_columns(sys, report)
        solved_vels = [sys.velocities[i] for i in cols]
        jac = []
        rhs = []
        momdict = dict(sys.momenta)
        for i in cols:
            coord = sys.coordinates[i]
            p_expr = momdict[momentum_symbol(coord)]
            row = []
            for v in solved_vels:
                entry = simplify(differentiate(p_expr, v), sys.positive)
                if free_symbols(entry) & set(solved_vels):
                    raise InversionUnsupportedError(
                        f"momentum {momentum_symbol(coord)} is not affine in "
                        f"the solvable velocities (register a template)")
                row.append(entry)
            jac.append(row)
            affine = p_expr
            for v, entry in zip(solved_vels, row):
                affine = affine - entry * Sym(v)
            affine = simplify(affine, sys.positive, expand=True)
            if free_symbols(affine) & set(solved_vels):
                raise InversionUnsupportedError(
                    f"momentum {momentum_symbol(coord)} is not affine in the "
                    f"solvable velocities (register a template)")
            rhs.append(simplify(Sym(momentum_symbol(coord)) - affine,
                                sys.positive))
        sol = _symbolic_linear_solve(jac, rhs, sys.positive)
        solved = dict(zip(solved_vels, sol))
    if verify:
        momdict = dict(sys.momenta)
        for i, coord in enumerate(sys.coordinates):
            vel = sys.velocities[i]
            if vel not in solved:
                continue
            p_sym = momentum_symbol(coord)
            residual = substitute(momdict[p_sym], solved) - Sym(p_sym)
            verdict = is_zero(residual, sys.positive,
                              sys.concrete_functions(), seed=seed)
            if not verdict.is_zero:
                raise AnalysisError(
                    f"solved velocity for {vel} fails its momentum equation: "
                    f"{verdict.describe()}")
    sys.solved_velocities = solved
    return solved


def analyze(sys, seed=None):
    """Run momenta, Hessian rank and velocity inversion in order."""
    conjugate_momenta(sys)
    report = hessian(sys, seed=seed)
    solve_velocities(sys, seed=seed)
    return report


# ---------------------------------------------------------------------------
# parametrization

def parametrize(regular, time_symbol="t"):
    """Adjoin physical time as a coordinate: L = tdot * L_reg(q, q'/tdot).

    The output is singular with exactly one primary constraint; its Hessian
    rank equals the input dimension.
    """
    syms = free_symbols(regular.lagrangian)
    if "tdot" in syms:
        raise AnalysisError("input already contains the symbol 'tdot'")
    if time_symbol in regular.coordinates:
        raise AnalysisError(f"coordinate {time_symbol!r} already present")
    report = hessian(regular)
    if report.numeric_rank < len(regular.velocities):
        raise SingularInputError("parametrize() requires a regular Lagrangian")
    tdot = Sym("tdot")
    subs = {}
    new_vels = ["tdot"]
    for coord, vel in zip(regular.coordinates, regular.velocities):
        prime = coord + "prime"
        if prime in syms:
            raise AnalysisError(f"symbol {prime!r} already in use")
        subs[vel] = Mul(Sym(prime), Pow(tdot, Const(-1)))
        new_vels.append(prime)
    lag = simplify(Mul(tdot, substitute(regular.lagrangian, subs)),
                   regular.positive | {"tdot"})
    return LagrangianSystem(
        coordinates=[time_symbol] + list(regular.coordinates),
        velocities=new_vels,
        lagrangian=lag,
        positive=set(regular.positive) | {"tdot"},
        parameters=dict(regular.parameters),
        functions=dict(regular.functions),
        system_id=f"parametrized({regular.system_id})",
    )


def homogeneity_residual(sys, lam):
    """L(q, lam*v) - lam*L(q, v); zero for degree-1 homogeneous Lagrangians."""
    scaled = substitute(sys.lagrangian,
                        {v: Mul(Const(lam), Sym(v)) for v in sys.velocities})
    return simplify(scaled - Const(lam) * sys.lagrangian, sys.positive,
                    expand=True)


def euler_residual(sys):
    """sum_mu v_mu dL/dv_mu - L: the canonical-Hamiltonian obstruction."""
    acc = -sys.lagrangian
    for v in sys.velocities:
        acc = acc + Sym(v) * differentiate(sys.lagrangian, v)
    return simplify(acc, sys.positive, expand=True)


# ---------------------------------------------------------------------------
# system definition files

_FILE_KEYS = {"coordinates", "velocities", "lagrangian", "positive",
              "functions", "parameters", "template"}

_FUNCDEF_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\(([A-Za-z_][A-Za-z0-9_]*)\)")


def parse_system_text(text):
    """Parse the plain key-value system definition format.

    Recognized keys: coordinates, lagrangian, positive, functions, template,
    plus optional velocities, parameters (name=value pairs) and concrete
    function definitions written as `V(q) = q^2/2`.
    """
    entries = {}
    funcdefs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise AnalysisError(f"line {lineno}: expected `key = value`")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        m = _FUNCDEF_RE.fullmatch(key)
        if m:
            funcdefs[m.group(1)] = (m.group(2), value)
            continue
        if key not in _FILE_KEYS:
            raise AnalysisError(f"line {lineno}: unknown key {key!r}")
        entries[key] = value
    if "coordinates" not in entries or "lagrangian" not in entries:
        raise AnalysisError("system file needs `coordinates` and `lagrangian`")

    coords = [c.strip() for c in entries["coordinates"].split(",") if c.strip()]
    fnames = [f.strip() for f in entries.get("functions", "").split(",")
              if f.strip()]
    functions = {n: None for n in fnames}
    for name, (var, src) in funcdefs.items():
        if name not in functions:
            raise AnalysisError(f"definition for undeclared function {name!r}")
        functions[name] = (var, parse(src, known_functions=set(fnames)))
    positive = {s.strip() for s in entries.get("positive", "").split(",")
                if s.strip()}
    parameters = {}
    for item in entries.get("parameters", "").split(","):
        item = item.strip()
        if not item:
            continue
        name, _, val = item.partition("=")
        parameters[name.strip()] = float(val)
    lagrangian = parse(entries["lagrangian"], known_functions=set(fnames),
                       positive=positive)

    if "velocities" in entries:
        vels = [v.strip() for v in entries["velocities"].split(",")
                if v.strip()]
    else:
        syms = free_symbols(lagrangian)
        vels = []
        for c in coords:
            if c + "dot" in syms:
                vels.append(c + "dot")
            elif c + "prime" in syms:
                vels.append(c + "prime")
            else:
                vels.append(c + "dot")
    sys = LagrangianSystem(
        coordinates=coords,
        velocities=vels,
        lagrangian=lagrangian,
        positive=positive,
        parameters=parameters,
        functions=functions,
        template=entries.get("template", "none"),
        system_id="file",
    )
    return sys
