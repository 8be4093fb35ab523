"""Property tests for the expression core: randomized trees checked against
finite differences, value preservation under simplify, and the
parse/print round trip."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from hjdyn.expr import (
    Const, DomainError, EvalError, Sqrt, Sym, differentiate, evaluate,
    is_zero, parse, simplify, to_string,
)

SYMS = ("x", "y", "z")


def expr_trees(max_leaves=8):
    leaf = st.one_of(
        st.sampled_from([Sym(s) for s in SYMS]),
        st.integers(-4, 4).map(lambda n: Const(n)),
    )

    def extend(children):
        return st.one_of(
            st.tuples(children, children).map(lambda ab: ab[0] + ab[1]),
            st.tuples(children, children).map(lambda ab: ab[0] - ab[1]),
            st.tuples(children, children).map(lambda ab: ab[0] * ab[1]),
            st.tuples(children, st.integers(1, 3)).map(
                lambda bn: bn[0] ** bn[1]),
            children.map(lambda c: -c),
            children.map(lambda c: Sqrt(c * c + Const(1))),
        )

    return st.recursive(leaf, extend, max_leaves=max_leaves)


def _points():
    return st.fixed_dictionaries(
        {s: st.floats(-2.0, 2.0, allow_nan=False).map(
            lambda v: round(v, 3)) for s in SYMS})


@settings(max_examples=50, deadline=None)
@given(expr_trees(), _points())
def test_simplify_preserves_value(e, pt):
    try:
        want = evaluate(e, pt)
    except (EvalError, DomainError, OverflowError, ZeroDivisionError):
        return
    if not math.isfinite(want) or abs(want) > 1e12:
        return
    got = evaluate(simplify(e, expand=True), pt)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(expr_trees(), _points())
def test_derivative_matches_finite_difference(e, pt):
    d = differentiate(e, "x")
    h = 1e-6
    up = dict(pt, x=pt["x"] + h)
    dn = dict(pt, x=pt["x"] - h)
    try:
        fd = (evaluate(e, up) - evaluate(e, dn)) / (2 * h)
        got = evaluate(d, pt)
    except (EvalError, DomainError, OverflowError, ZeroDivisionError):
        return
    if not (math.isfinite(fd) and math.isfinite(got)):
        return
    if abs(fd) > 1e8:
        return
    assert got == pytest.approx(fd, rel=1e-4, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(expr_trees())
def test_parse_print_roundtrip(e):
    s = simplify(e)
    again = parse(to_string(s))
    v = is_zero(s - again, seed=0)
    assert v.is_zero, f"{to_string(s)} != {to_string(again)}"


@settings(max_examples=30, deadline=None)
@given(expr_trees(), expr_trees(), _points())
def test_derivative_linearity(a, b, pt):
    lhs = differentiate(a + b, "x")
    rhs = differentiate(a, "x") + differentiate(b, "x")
    try:
        lv = evaluate(lhs, pt)
        rv = evaluate(rhs, pt)
    except (EvalError, DomainError, OverflowError, ZeroDivisionError):
        return
    if not (math.isfinite(lv) and math.isfinite(rv)) or abs(lv) > 1e12:
        return
    assert lv == pytest.approx(rv, rel=1e-10, abs=1e-9)
