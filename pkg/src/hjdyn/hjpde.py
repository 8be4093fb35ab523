"""Hamilton-Jacobi constraint set: H'_alpha = p_alpha + H_alpha, the
canonical Hamiltonian, and its weak-vanishing verdict."""

from __future__ import annotations

from dataclasses import dataclass, field

from .expr import (
    Const, Expr, Sym, ZERO, differentiate, free_symbols, is_zero, simplify,
    substitute, to_string,
)
from .legendre import (
    AnalysisError, LagrangianSystem, analyze, constraint_label,
    momentum_symbol,
)


@dataclass
class Constraint:
    label: str          # display suffix: H'_<label>
    coordinate: str
    momentum: str
    h: Expr             # H_alpha (no p_alpha dependence)
    hprime: Expr        # p_alpha + H_alpha


@dataclass
class HJPDESet:
    system: LagrangianSystem
    constraints: list
    canonical_hamiltonian: Expr
    vanishing: "ZeroVerdict"
    q_symbols: list     # solved coordinates q_a
    p_symbols: list     # their momenta p_a
    t_symbols: list     # constrained coordinates t_alpha
    pt_symbols: list    # their momenta p_alpha

    def constraint(self, label):
        for c in self.constraints:
            if c.label == label:
                return c
        raise KeyError(f"no constraint H'_{label}")

    def phase_pairs(self):
        """Conjugate pairs of the extended phase space."""
        return list(zip(self.q_symbols, self.p_symbols)) + \
            list(zip(self.t_symbols, self.pt_symbols))

    def surface_substitution(self):
        """p_alpha -> -H_alpha, projecting onto the constraint surface."""
        return {c.momentum: simplify(Const(-1) * c.h, self.system.positive)
                for c in self.constraints}


def build_constraints(sys, seed=None):
    """Derive the HJPDE set from an analyzed Lagrangian system.

    One constraint per unsolvable momentum: H_alpha is minus the momentum
    definition with the solved velocities substituted in; template systems
    supply H_alpha in closed form and it is verified numerically instead.
    """
    if sys.solved_velocities is None:
        analyze(sys, seed=seed)
    momdict = dict(sys.momenta)
    solved = sys.solved_velocities
    positive = sys.positive
    constraints = []
    q_symbols, p_symbols, t_symbols, pt_symbols = [], [], [], []
    for coord, vel in zip(sys.coordinates, sys.velocities):
        if vel in solved:
            q_symbols.append(coord)
            p_symbols.append(momentum_symbol(coord))
            continue
        t_symbols.append(coord)
        p_alpha = momentum_symbol(coord)
        pt_symbols.append(p_alpha)
        substituted = substitute(momdict[p_alpha], solved)
        if sys.closed_form_h and coord in sys.closed_form_h:
            h = simplify(sys.closed_form_h[coord], positive)
            verdict = is_zero(substituted + h, positive,
                              sys.concrete_functions(), seed=seed)
            if not verdict.is_zero:
                raise AnalysisError(
                    f"closed-form H_{constraint_label(coord)} fails its "
                    f"momentum identity: {verdict.describe()}")
        else:
            h = simplify(Const(-1) * substituted, positive, expand=True)
            leftover = free_symbols(h) & set(sys.velocities)
            if leftover:
                raise AnalysisError(
                    f"H_{constraint_label(coord)} still depends on "
                    f"velocities {sorted(leftover)}; register a template "
                    f"closed form")
        if p_alpha in free_symbols(h):
            raise AnalysisError(
                f"H_{constraint_label(coord)} depends on its own momentum")
        hprime = simplify(Sym(p_alpha) + h, positive)
        constraints.append(Constraint(constraint_label(coord), coord,
                                      p_alpha, h, hprime))
    h0, verdict = canonical_hamiltonian_parts(sys, constraints, seed=seed)
    return HJPDESet(sys, constraints, h0, verdict, q_symbols, p_symbols,
                    t_symbols, pt_symbols)


def canonical_hamiltonian_parts(sys, constraints, seed=None):
    """H_0 = p_a w_a + p_alpha v_alpha|_{p_alpha=-H_alpha} - L(w)."""
    solved = sys.solved_velocities
    positive = sys.positive
    acc = Const(-1) * substitute(sys.lagrangian, solved)
    for coord, vel in zip(sys.coordinates, sys.velocities):
        if vel in solved:
            acc = acc + Sym(momentum_symbol(coord)) * solved[vel]
    for c in constraints:
        vel = sys.velocity_of(c.coordinate)
        acc = acc + (Const(-1) * c.h) * Sym(vel)
    h0 = simplify(acc, positive, expand=True)
    verdict = is_zero(h0, positive, sys.concrete_functions(), seed=seed)
    return h0, verdict


def canonical_hamiltonian(sys, seed=None):
    """Return (H_0 expression, vanishing verdict); builds constraints if
    needed."""
    hj = build_constraints(sys, seed=seed)
    return hj.canonical_hamiltonian, hj.vanishing


def structural_checks(hj):
    """Shape invariants: unit p_alpha coefficient and H_alpha free of every
    constrained momentum.  Returns a list of human-readable failures."""
    failures = []
    for c in hj.constraints:
        coeff = simplify(differentiate(c.hprime, c.momentum))
        if coeff != Const(1):
            failures.append(f"dH'_{c.label}/d{c.momentum} != 1")
        bad = free_symbols(c.h) & set(hj.pt_symbols)
        if bad:
            failures.append(f"H_{c.label} depends on {sorted(bad)}")
    return failures


def report_dict(hj):
    """JSON-ready summary used by the analyze CLI."""
    return {
        "rank": hj.system.rank,
        "constraints": [
            {"label": f"H'_{c.label}", "expression": to_string(c.hprime)}
            for c in hj.constraints
        ],
        "canonical_hamiltonian": to_string(hj.canonical_hamiltonian),
        "vanishing": hj.vanishing.tag,
    }
