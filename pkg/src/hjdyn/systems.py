"""Registered templates for the four worked systems: parametrized regular,
parametrized oscillator, relativistic charged particle and relativistic free
particle.  Each bundles its Lagrangian, closed-form velocity inversions
where the generic linear solve cannot apply, and reference solutions."""

from __future__ import annotations

import math
import urllib.parse
from dataclasses import dataclass

from .expr import (
    Const, Func, Mul, Pow, Sqrt, Sym, parse, simplify, substitute, to_string,
)
from .legendre import AnalysisError, LagrangianSystem, parametrize, parse_system_text

TEMPLATE_IDS = ("parametrized_regular", "parametrized_oscillator",
                "relativistic_charged", "relativistic_free")


class TemplateError(AnalysisError):
    pass


@dataclass
class ReferenceState:
    values: dict
    action: float | None = None


def _regular_1d(v_def):
    functions = {"V": None}
    if v_def is not None:
        functions["V"] = ("q", parse(v_def))
    lag = parse("qdot^2/2 - V(q)", known_functions={"V"})
    return LagrangianSystem(["q"], ["qdot"], lag, functions=functions,
                            system_id="regular_1d")


def _relativistic(m, c, e, a_exprs, system_id):
    if m <= 0 or c <= 0:
        raise TemplateError("parameters require m > 0 and c > 0")
    coords = ["q0", "q1", "q2", "q3"]
    vels = [q + "dot" for q in coords]
    v = [Sym(s) for s in vels]
    mc = Const(m * c)
    ec = Const(e / c)
    qdot_sq = v[0] ** 2 - v[1] ** 2 - v[2] ** 2 - v[3] ** 2
    coupling = sum((v[i] * a_exprs[i] for i in range(4)), Const(0))
    lag = simplify(-(mc * Sqrt(qdot_sq) + ec * coupling), {"q0dot"})
    k = [simplify(Sym(f"p_{i}") + ec * a_exprs[i]) for i in range(1, 4)]
    ksq = k[0] ** 2 + k[1] ** 2 + k[2] ** 2 + Const(m * m * c * c)
    root = Sqrt(ksq)
    closed_w = {vels[i]: simplify(k[i - 1] * Sym("q0dot") / root)
                for i in (1, 2, 3)}
    closed_h = {"q0": simplify(root + ec * a_exprs[0])}
    return LagrangianSystem(
        coordinates=coords,
        velocities=vels,
        lagrangian=lag,
        positive={"q0dot"},
        parameters={"m": m, "c": c, "e": e},
        template=system_id,
        system_id=system_id,
        closed_form_w=closed_w,
        closed_form_h=closed_h,
    )


def instantiate(template_id, params=None):
    """Build a LagrangianSystem for a registered template id.

    params (all optional): m, c, e as numbers; V as a DSL string in q;
    A0..A3 as DSL strings in q0..q3.
    """
    params = dict(params or {})
    if template_id == "parametrized_regular":
        return _build_parametrized(params.pop("V", None), params,
                                   "parametrized_regular")
    if template_id == "parametrized_oscillator":
        return _build_parametrized(params.pop("V", "q^2/2"), params,
                                   "parametrized_oscillator")
    if template_id in ("relativistic_charged", "relativistic_free"):
        m = float(params.pop("m", 1.0))
        c = float(params.pop("c", 1.0))
        e = float(params.pop("e", 1.0))
        if template_id == "relativistic_free":
            a_exprs = [Const(0)] * 4
        else:
            a_exprs = [parse(str(params.pop(f"A{i}", "0"))) for i in range(4)]
        if params:
            raise TemplateError(f"unknown parameters {sorted(params)}")
        return _relativistic(m, c, e, a_exprs, template_id)
    raise TemplateError(f"unknown template id {template_id!r}")


def _build_parametrized(v_def, params, system_id):
    if params:
        raise TemplateError(f"unknown parameters {sorted(params)}")
    sys = parametrize(_regular_1d(v_def))
    sys.template = system_id
    sys.system_id = system_id
    return sys


# ---------------------------------------------------------------------------
# reference solutions

def reference_solution(template_id, params, initial, t):
    """Closed-form phase state at evolution parameter value t.

    Available for relativistic_free (straight worldlines) and the
    parametrized oscillator with V = q^2/2 (cos/sin rotation).
    """
    params = dict(params or {})
    if template_id == "relativistic_free":
        m = float(params.get("m", 1.0))
        c = float(params.get("c", 1.0))
        p = [float(initial.get(f"p_{i}", 0.0)) for i in (1, 2, 3)]
        alpha = [float(initial.get(f"q{i}", 0.0)) for i in (1, 2, 3)]
        root = math.sqrt(p[0] ** 2 + p[1] ** 2 + p[2] ** 2 + m * m * c * c)
        values = {"q0": t}
        for i in (1, 2, 3):
            values[f"q{i}"] = alpha[i - 1] + p[i - 1] / root * t
            values[f"p_{i}"] = p[i - 1]
        values["p_0"] = -root
        # dZ = (-H_0 + sum p dH'/dp) dq0 with H_0 = root here
        action = (-root + (p[0] ** 2 + p[1] ** 2 + p[2] ** 2) / root) * t
        return ReferenceState(values, action)
    if template_id == "parametrized_oscillator":
        v = params.get("V", "q^2/2")
        if v.replace(" ", "") not in ("q^2/2", "q*q/2", "0.5*q^2"):
            raise TemplateError("closed form only for V = q^2/2")
        q0 = float(initial.get("q", 0.0))
        p0 = float(initial.get("p_q", initial.get("p", 0.0)))
        q = q0 * math.cos(t) + p0 * math.sin(t)
        p = -q0 * math.sin(t) + p0 * math.cos(t)
        energy = 0.5 * (q0 * q0 + p0 * p0)
        action = 0.25 * (p0 * p0 - q0 * q0) * math.sin(2 * t) \
            + 0.5 * q0 * p0 * (math.cos(2 * t) - 1.0)
        return ReferenceState({"t": t, "q": q, "p_q": p, "p_t": -energy},
                              action)
    raise TemplateError(f"no closed-form reference for {template_id!r}")


# ---------------------------------------------------------------------------
# CLI selector

def load_system(selector):
    """Resolve a --system value: a template URI or a definition file path.

    Template URIs look like
    `template:relativistic_charged?m=1&c=1&e=1&A0=-q1&A1=0`.
    """
    if selector.startswith("template:"):
        rest = selector[len("template:"):]
        name, _, query = rest.partition("?")
        params = {}
        if query:
            for key, vals in urllib.parse.parse_qs(
                    query, keep_blank_values=True).items():
                params[key] = vals[-1]
        return instantiate(name, params)
    with open(selector) as fh:
        sys = parse_system_text(fh.read())
    if sys.template and sys.template != "none":
        tpl = instantiate(sys.template, {k: v for k, v in
                                         sys.parameters.items()})
        sys.closed_form_w = tpl.closed_form_w
        sys.closed_form_h = tpl.closed_form_h
    return sys
