"""Poisson brackets, total variations of the constraints along the
multi-parameter flow, the consistency (Dirac) iteration, and first/
second-class classification."""

from __future__ import annotations

from dataclasses import dataclass, field

from .expr import (
    Const, Expr, Sym, ZERO, differentiate, free_symbols, is_zero, simplify,
    substitute, to_string,
)
from .hjpde import HJPDESet


class InconsistentDynamicsError(Exception):
    """A nonzero constant appeared as a consistency condition."""


class IterationBoundError(Exception):
    pass


def poisson_bracket(a, b, pairs, positive=()):
    """{a, b} = sum over conjugate pairs of dA/dq dB/dp - dA/dp dB/dq."""
    acc = ZERO
    for q, p in pairs:
        acc = acc + differentiate(a, q) * differentiate(b, p) \
            - differentiate(a, p) * differentiate(b, q)
    return simplify(acc, positive)


@dataclass
class Variation:
    label: str
    coefficients: dict      # direction label -> Expr
    verdicts: dict          # direction label -> ZeroVerdict

    @property
    def zero(self):
        return all(v.is_zero for v in self.verdicts.values())


@dataclass
class IntegrabilityReport:
    variations: list                    # per initial constraint
    generations: list                   # list of lists of Expr
    classification: list                # ((label_i, label_j), tag)
    integrable: bool
    determined_directions: list = field(default_factory=list)

    def to_dict(self):
        return {
            "integrable": self.integrable,
            "variations": [
                {"label": f"H'_{v.label}",
                 "verdicts": {d: vv.tag for d, vv in v.verdicts.items()}}
                for v in self.variations
            ],
            "generations": [[to_string(c) for c in gen]
                            for gen in self.generations],
            "classification": [
                {"pair": list(pair), "tag": tag}
                for pair, tag in self.classification
            ],
        }


def _flow_directions(hj):
    """(label, generator) for every independent evolution direction.

    Each constraint coordinate t_alpha carries generator H'_alpha; the
    underlying parameter (tau, or the physical time of an unparametrized
    system) carries the canonical Hamiltonian H_0.
    """
    dirs = [("tau", hj.canonical_hamiltonian)]
    for c in hj.constraints:
        dirs.append((c.label, c.hprime))
    return dirs


def _surface_zero(hj, e, seed=None):
    on_surface = simplify(substitute(e, hj.surface_substitution()),
                          hj.system.positive)
    return is_zero(on_surface, hj.system.positive,
                   hj.system.concrete_functions(), seed=seed)


def total_variation(hj, label, seed=None):
    """dH'_label expressed in the dt_alpha basis, each coefficient
    zero-tested on the constraint surface."""
    target = hj.constraint(label).hprime
    pairs = hj.phase_pairs()
    coefficients = {}
    verdicts = {}
    for dlabel, gen in _flow_directions(hj):
        coeff = poisson_bracket(target, gen, pairs, hj.system.positive)
        coefficients[dlabel] = coeff
        verdicts[dlabel] = _surface_zero(hj, coeff, seed=seed)
    return Variation(label, coefficients, verdicts)


def _is_constant(e):
    return not free_symbols(e)


def _is_redundant(candidate, constraints, positive):
    for c in constraints:
        if simplify(candidate - c, positive, expand=True) == ZERO:
            return True
        if simplify(candidate + c, positive, expand=True) == ZERO:
            return True
    return False


def consistency_iterate(hj, seed=None):
    """Dirac-style consistency iteration.

    Starts from the primary constraints and repeatedly appends nonvanishing
    variation coefficients as new constraints.  A constant nonzero bracket
    against a direction's generator fixes that direction's multiplier
    (second-class pair) instead of spawning a constraint; a constant nonzero
    constraint is a contradiction.
    """
    positive = hj.system.positive
    pairs = hj.phase_pairs()
    directions = dict(_flow_directions(hj))
    determined = []
    variations = [total_variation(hj, c.label, seed=seed)
                  for c in hj.constraints]
    all_constraints = [c.hprime for c in hj.constraints]
    generations = [list(all_constraints)]
    pending = list(all_constraints)
    second_class = []
    max_gen = 2 * len(pairs) + 1
    for _ in range(max_gen):
        new = []
        for cexpr in pending:
            for dlabel, gen in directions.items():
                coeff = poisson_bracket(cexpr, gen, pairs, positive)
                verdict = _surface_zero(hj, coeff, seed=seed)
                if verdict.is_zero:
                    continue
                flat = simplify(substitute(coeff, hj.surface_substitution()),
                                positive, expand=True)
                if _is_constant(flat):
                    if dlabel == "tau":
                        # the underlying parameter advances with unit
                        # multiplier; a constant nonzero rate of change of a
                        # constraint cannot be absorbed
                        raise InconsistentDynamicsError(
                            f"d({to_string(cexpr)}) = "
                            f"{to_string(flat)} dtau: contradiction")
                    # multiplier along this direction is determined
                    if dlabel not in determined:
                        determined.append(dlabel)
                        second_class.append((cexpr, dlabel))
                    continue
                if _is_redundant(flat, all_constraints + new, positive):
                    continue
                new.append(flat)
        for d in determined:
            directions.pop(d, None)
        if not new:
            break
        for cand in new:
            if _is_constant(cand):
                raise InconsistentDynamicsError(
                    f"constant nonzero constraint {to_string(cand)}")
        generations.append(new)
        all_constraints.extend(new)
        pending = new
    else:
        raise IterationBoundError(
            f"consistency iteration did not settle in {max_gen} passes")
    classification = classify_constraints(hj, all_constraints, seed=seed)
    integrable = all(v.zero for v in variations) if len(generations) == 1 \
        else _final_generation_clean(hj, generations[-1], directions, seed)
    return IntegrabilityReport(variations, generations, classification,
                               integrable, determined)


def _final_generation_clean(hj, constraints, directions, seed):
    pairs = hj.phase_pairs()
    positive = hj.system.positive
    for c in constraints:
        for _, gen in directions.items():
            coeff = poisson_bracket(c, gen, pairs, positive)
            if not _surface_zero(hj, coeff, seed=seed).is_zero:
                return False
    return True


def classify_constraints(hj, constraints, seed=None):
    """Pairwise tags: second-class for constant nonzero brackets (Dirac
    bracket territory), first-class when the bracket vanishes weakly,
    undetermined otherwise."""
    pairs = hj.phase_pairs()
    positive = hj.system.positive
    labels = [to_string(c) for c in constraints]
    out = []
    n = len(constraints)
    if n == 1:
        out.append(((labels[0], labels[0]), "first-class"))
        return out
    for i in range(n):
        for j in range(i + 1, n):
            b = poisson_bracket(constraints[i], constraints[j], pairs,
                                positive)
            flat = simplify(b, positive, expand=True)
            if flat == ZERO:
                out.append(((labels[i], labels[j]), "first-class"))
                continue
            if _is_constant(flat):
                out.append(((labels[i], labels[j]), "second-class"))
                continue
            if _surface_zero(hj, flat, seed=seed).is_zero:
                out.append(((labels[i], labels[j]), "first-class"))
            else:
                out.append(((labels[i], labels[j]), "undetermined"))
    return out
