"""Compile expression trees into numeric callables.

Expressions reaching this layer must be fully concrete: no opaque named
functions (substitute definitions first).  Generated functions use numpy
scalar math so the same source works as a plain Python callable, under
numba @njit, and broadcast over arrays for vectorized evaluation.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .expr import ExprError, free_functions


def _emit(e, names):
    k = e.kind
    if k == "const":
        return repr(e.value)
    if k == "sym":
        try:
            return names[e.name]
        except KeyError:
            raise ExprError(f"symbol {e.name!r} has no slot in the state vector") from None
    if k == "sum":
        return "(" + " + ".join(_emit(a, names) for a in e.args) + ")"
    if k == "prod":
        return "(" + " * ".join(_emit(a, names) for a in e.args) + ")"
    if k == "neg":
        return f"(-{_emit(e.args[0], names)})"
    if k == "sqrt":
        return f"np.sqrt({_emit(e.args[0], names)})"
    if k == "pow":
        b, x = e.args
        return f"({_emit(b, names)}) ** ({_emit(x, names)})"
    raise ExprError(f"cannot compile node kind {e.kind!r}; "
                    "substitute function definitions first")


def _check_concrete(exprs):
    for e in exprs:
        fns = free_functions(e)
        if fns:
            raise ExprError(
                f"cannot compile: no concrete definition for {sorted(fns)}")


def compile_rhs(exprs, state_names, param_name):
    """Compile d(state)/d(param) expressions into rhs(t, y, out).

    Returns (python_fn, numba_fn_or_None) suitable for kernels.rk4_integrate.
    """
    _check_concrete(exprs)
    names = {n: f"y[{i}]" for i, n in enumerate(state_names)}
    if param_name is not None:
        names[param_name] = "t"
    lines = ["def _rhs(t, y, out):"]
    for i, e in enumerate(exprs):
        lines.append(f"    out[{i}] = {_emit(e, names)}")
    src = "\n".join(lines)
    ns = {"np": np}
    exec(compile(src, "<hjdyn-rhs>", "exec"), ns)
    py_fn = ns["_rhs"]
    nb_fn = None
    if kernels.NUMBA_ENABLED:
        from numba import njit

        nb_fn = njit(cache=False)(py_fn)
    return py_fn, nb_fn


def compile_columns(exprs, state_names, param_name):
    """Compile expressions into f(t, Y) over trajectory arrays.

    Y has one row per sample and one column per state name; t is the
    matching 1-D parameter array.  Returns an array of shape
    (len(exprs), nsamples).
    """
    _check_concrete(exprs)
    names = {n: f"Y[:, {i}]" for i, n in enumerate(state_names)}
    if param_name is not None:
        names[param_name] = "t"
    body = ", ".join(f"_b({_emit(e, names)}, t)" for e in exprs)
    src = f"def _cols(t, Y):\n    return np.stack(({body},))"

    def _b(v, t):
        return np.broadcast_to(np.asarray(v, dtype=float), np.shape(t)).copy()

    ns = {"np": np, "_b": _b}
    exec(compile(src, "<hjdyn-cols>", "exec"), ns)
    return ns["_cols"]
