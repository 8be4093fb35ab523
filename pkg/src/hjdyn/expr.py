"""Symbolic expression core.

Small immutable expression trees over real scalars: parsing, printing,
simplification to a canonical form, exact differentiation, numeric
evaluation and randomized identical-vanishing tests.  This is deliberately
not a general CAS; the simplifier does constant folding, flattening,
like-term/like-factor collection and (optionally) expansion -- enough to
verify the identities the rest of the package relies on.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ExprError):
    pass


class DomainError(EvalError):
    """Evaluation left the real domain (sqrt of a negative, 0^negative)."""


# ---------------------------------------------------------------------------
# nodes

_KINDS = ("const", "sym", "sum", "prod", "pow", "neg", "sqrt", "func", "dfunc")
_KIND_RANK = {k: i for i, k in enumerate(_KINDS)}


@dataclass(frozen=True)
class Expr:
    kind: str
    args: tuple = ()
    value: float = 0.0
    name: str = ""
    order: int = 0

    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Add(self, Neg(_coerce(other)))

    def __rsub__(self, other):
        return Add(_coerce(other), Neg(self))

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __truediv__(self, other):
        return Mul(self, Pow(_coerce(other), Const(-1)))

    def __rtruediv__(self, other):
        return Mul(_coerce(other), Pow(self, Const(-1)))

    def __pow__(self, other):
        return Pow(self, _coerce(other))

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr<{to_string(self)}>"


def _coerce(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        return Const(x)
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def Const(v):
    return Expr("const", value=float(v))


def Sym(name):
    return Expr("sym", name=name)


def Add(*xs):
    xs = tuple(_coerce(x) for x in xs)
    if len(xs) == 1:
        return xs[0]
    return Expr("sum", xs)


def Mul(*xs):
    xs = tuple(_coerce(x) for x in xs)
    if len(xs) == 1:
        return xs[0]
    return Expr("prod", xs)


def Pow(base, exponent):
    return Expr("pow", (_coerce(base), _coerce(exponent)))


def Neg(x):
    return Expr("neg", (_coerce(x),))


def Sqrt(x):
    return Expr("sqrt", (_coerce(x),))


def Func(name, arg):
    return Expr("func", (_coerce(arg),), name=name)


def DFunc(name, arg, order=1):
    return Expr("dfunc", (_coerce(arg),), name=name, order=order)


ZERO = Const(0)
ONE = Const(1)


def _key(e):
    """Total order on expressions; used for canonical child ordering."""
    return (
        _KIND_RANK[e.kind],
        e.name,
        e.order,
        e.value if e.kind == "const" else 0.0,
        tuple(_key(a) for a in e.args),
    )


# ---------------------------------------------------------------------------
# traversal helpers

def free_symbols(e):
    out = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if n.kind == "sym":
            out.add(n.name)
        stack.extend(n.args)
    return out


def free_functions(e):
    out = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if n.kind in ("func", "dfunc"):
            out.add(n.name)
        stack.extend(n.args)
    return out


def symbols_under_sqrt(e):
    """Symbols that occur inside any sqrt (or fractional power) argument."""
    out = set()

    def walk(n, inside):
        if n.kind == "sym" and inside:
            out.add(n.name)
        if n.kind == "sqrt":
            walk(n.args[0], True)
            return
        if n.kind == "pow" and n.args[1].kind == "const" \
                and not float(n.args[1].value).is_integer():
            walk(n.args[0], True)
            walk(n.args[1], inside)
            return
        for a in n.args:
            walk(a, inside)

    walk(e, False)
    return out


def substitute(e, mapping):
    """Replace symbols by expressions; mapping is name -> Expr (or number)."""
    if e.kind == "sym":
        repl = mapping.get(e.name)
        return _coerce(repl) if repl is not None else e
    if not e.args:
        return e
    return Expr(e.kind, tuple(substitute(a, mapping) for a in e.args),
                e.value, e.name, e.order)


def substitute_functions(e, funcs):
    """Replace named-function applications by concrete expressions.

    funcs maps name -> (argument variable, definition Expr).  Derivative
    nodes are replaced by the derivative of the definition.
    """
    if e.kind in ("func", "dfunc") and e.name in funcs:
        var, body = funcs[e.name]
        body = substitute_functions(body, funcs)
        for _ in range(e.order if e.kind == "dfunc" else 0):
            body = differentiate(body, var)
        arg = substitute_functions(e.args[0], funcs)
        return substitute(body, {var: arg})
    if not e.args:
        return e
    return Expr(e.kind, tuple(substitute_functions(a, funcs) for a in e.args),
                e.value, e.name, e.order)


# ---------------------------------------------------------------------------
# simplification

def simplify(e, positive=(), expand=False):
    """Canonicalize: flatten, fold constants, collect like terms/factors.

    positive: symbol names that may be assumed > 0 (enables sqrt(x^2) -> x).
    expand: additionally distribute products over sums and small integer
    powers of sums; needed for cancellation-based zero detection.
    """
    return _simp(e, frozenset(positive), expand)


_COEFF_EPS = 1e-13


def _simp(e, pos, expand):
    k = e.kind
    if k in ("const", "sym"):
        return e
    if k == "neg":
        return _simp(Expr("prod", (Const(-1), e.args[0])), pos, expand)
    if k in ("func", "dfunc"):
        return Expr(k, (_simp(e.args[0], pos, expand),), name=e.name,
                    order=e.order)
    if k == "sqrt":
        a = _simp(e.args[0], pos, expand)
        if a.kind == "const" and a.value >= 0:
            return Const(math.sqrt(a.value))
        if a.kind == "pow" and a.args[1].kind == "const":
            n = a.args[1].value
            if n == 2 and a.args[0].kind == "sym" and a.args[0].name in pos:
                return a.args[0]
        return Expr("sqrt", (a,))
    if k == "pow":
        return _simp_pow(e, pos, expand)
    if k == "sum":
        return _simp_sum(e, pos, expand)
    if k == "prod":
        return _simp_prod(e, pos, expand)
    raise ExprError(f"unknown node kind {k!r}")


def _simp_pow(e, pos, expand):
    b = _simp(e.args[0], pos, expand)
    x = _simp(e.args[1], pos, expand)
    if x.kind != "const":
        return Expr("pow", (b, x))
    n = x.value
    if n == 0:
        return ONE
    if n == 1:
        return b
    if b.kind == "const":
        if b.value == 0 and n < 0:
            return Expr("pow", (b, x))
        if b.value >= 0 or float(n).is_integer():
            return Const(b.value ** n)
        return Expr("pow", (b, x))
    if b.kind == "pow" and b.args[1].kind == "const":
        return _simp(Expr("pow", (b.args[0], Const(b.args[1].value * n))),
                     pos, expand)
    if b.kind == "sqrt":
        return _simp(Expr("pow", (b.args[0], Const(n / 2))), pos, expand)
    if b.kind == "prod" and float(n).is_integer():
        return _simp(Expr("prod", tuple(Expr("pow", (f, x)) for f in b.args)),
                     pos, expand)
    if b.kind == "sum" and expand and float(n).is_integer() and 2 <= n <= 6:
        return _simp(Expr("prod", (b,) * int(n)), pos, expand)
    if n == 0.5:
        return Expr("sqrt", (b,))
    return Expr("pow", (b, x))


def _split_term(t):
    """Simplified term -> (coefficient, tuple of non-constant factors)."""
    if t.kind == "const":
        return t.value, ()
    if t.kind == "prod":
        coeff = 1.0
        rest = []
        for f in t.args:
            if f.kind == "const":
                coeff *= f.value
            else:
                rest.append(f)
        return coeff, tuple(rest)
    return 1.0, (t,)


def _rebuild_term(coeff, mono):
    if not mono:
        return Const(coeff)
    if coeff == 1.0 and len(mono) == 1:
        return mono[0]
    factors = list(mono)
    if coeff != 1.0:
        factors.insert(0, Const(coeff))
    return Expr("prod", tuple(factors))


def _simp_sum(e, pos, expand):
    terms = []
    for a in e.args:
        s = _simp(a, pos, expand)
        terms.extend(s.args if s.kind == "sum" else (s,))
    acc = {}
    monos = {}
    const_acc = 0.0
    for t in terms:
        c, mono = _split_term(t)
        if not mono:
            const_acc += c
            continue
        kk = tuple(_key(f) for f in mono)
        acc[kk] = acc.get(kk, 0.0) + c
        monos[kk] = mono
    scale = max([abs(const_acc)] + [abs(c) for c in acc.values()] + [1.0])
    out = []
    for kk, c in acc.items():
        if abs(c) > _COEFF_EPS * scale:
            out.append(_rebuild_term(c, monos[kk]))
    if abs(const_acc) > _COEFF_EPS * scale:
        out.append(Const(const_acc))
    out.sort(key=_key)
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Expr("sum", tuple(out))


def _simp_prod(e, pos, expand):
    factors = []
    for a in e.args:
        s = _simp(a, pos, expand)
        factors.extend(s.args if s.kind == "prod" else (s,))
    if expand and any(f.kind == "sum" for f in factors):
        combos = [ONE]
        for f in factors:
            parts = f.args if f.kind == "sum" else (f,)
            combos = [Expr("prod", (c, p)) for c in combos for p in parts]
        return _simp(Expr("sum", tuple(combos)), pos, expand)
    # distribute a pure constant coefficient over a single sum factor
    if not expand and sum(f.kind == "sum" for f in factors) == 1 \
            and all(f.kind in ("sum", "const") for f in factors):
        the_sum = next(f for f in factors if f.kind == "sum")
        consts = tuple(f for f in factors if f.kind == "const")
        if consts:
            return _simp(Expr("sum", tuple(Expr("prod", consts + (t,))
                                           for t in the_sum.args)),
                         pos, expand)
    coeff = 1.0
    exps = {}
    bases = {}
    opaque = []  # factors we do not merge (pow with symbolic exponent)
    for f in factors:
        if f.kind == "const":
            coeff *= f.value
            continue
        if f.kind == "pow" and f.args[1].kind == "const":
            base, ex = f.args[0], f.args[1].value
        elif f.kind == "sqrt":
            base, ex = f.args[0], 0.5
        elif f.kind == "pow":
            opaque.append(f)
            continue
        else:
            base, ex = f, 1.0
        kk = _key(base)
        exps[kk] = exps.get(kk, 0.0) + ex
        bases[kk] = base
    if coeff == 0.0:
        return ZERO
    out = list(opaque)
    for kk, ex in exps.items():
        base = bases[kk]
        if abs(ex) < _COEFF_EPS:
            continue
        if ex == 1.0:
            out.append(base)
        elif ex == 0.5:
            out.append(Expr("sqrt", (base,)))
        else:
            out.append(Expr("pow", (base, Const(ex))))
    out.sort(key=_key)
    if not out:
        return Const(coeff)
    if coeff != 1.0:
        out.insert(0, Const(coeff))
    if len(out) == 1:
        return out[0]
    return Expr("prod", tuple(out))


# ---------------------------------------------------------------------------
# differentiation

def differentiate(e, s):
    """Exact partial derivative with respect to symbol name s (simplified)."""
    return simplify(_diff(e, s))


def _diff(e, s):
    k = e.kind
    if k == "const":
        return ZERO
    if k == "sym":
        return ONE if e.name == s else ZERO
    if k == "sum":
        return Expr("sum", tuple(_diff(a, s) for a in e.args))
    if k == "neg":
        return Neg(_diff(e.args[0], s))
    if k == "prod":
        terms = []
        for i, f in enumerate(e.args):
            terms.append(Expr("prod",
                              e.args[:i] + (_diff(f, s),) + e.args[i + 1:]))
        return Expr("sum", tuple(terms))
    if k == "pow":
        b, x = e.args
        if x.kind != "const":
            raise ExprError("cannot differentiate power with symbolic exponent")
        return Mul(x, Pow(b, Const(x.value - 1)), _diff(b, s))
    if k == "sqrt":
        u = e.args[0]
        return Mul(Const(0.5), Pow(u, Const(-0.5)), _diff(u, s))
    if k == "func":
        return Mul(DFunc(e.name, e.args[0], 1), _diff(e.args[0], s))
    if k == "dfunc":
        return Mul(DFunc(e.name, e.args[0], e.order + 1), _diff(e.args[0], s))
    raise ExprError(f"unknown node kind {k!r}")


# ---------------------------------------------------------------------------
# evaluation

def evaluate(e, bindings, funcs=None):
    """Evaluate to a float.  bindings: symbol name -> value.

    funcs maps opaque function names to (argument variable, definition Expr);
    every named function / formal derivative reached during evaluation must
    have a definition.
    """
    funcs = funcs or {}
    return _ev(e, bindings, funcs)


def _ev(e, b, funcs):
    k = e.kind
    if k == "const":
        return e.value
    if k == "sym":
        try:
            return float(b[e.name])
        except KeyError:
            raise EvalError(f"unbound symbol {e.name!r}") from None
    if k == "sum":
        return sum(_ev(a, b, funcs) for a in e.args)
    if k == "prod":
        out = 1.0
        for a in e.args:
            out *= _ev(a, b, funcs)
        return out
    if k == "neg":
        return -_ev(e.args[0], b, funcs)
    if k == "sqrt":
        v = _ev(e.args[0], b, funcs)
        if v < 0:
            raise DomainError(f"sqrt of negative value {v}")
        return math.sqrt(v)
    if k == "pow":
        base = _ev(e.args[0], b, funcs)
        ex = _ev(e.args[1], b, funcs)
        if base == 0 and ex < 0:
            raise DomainError("zero raised to a negative power")
        if base < 0 and not float(ex).is_integer():
            raise DomainError("negative base with fractional exponent")
        return base ** ex
    if k in ("func", "dfunc"):
        if e.name not in funcs:
            raise EvalError(f"no definition for function {e.name!r}")
        var, body = funcs[e.name]
        for _ in range(e.order if k == "dfunc" else 0):
            body = differentiate(body, var)
        argval = _ev(e.args[0], b, funcs)
        inner = dict(b)
        inner[var] = argval
        return _ev(body, inner, funcs)
    raise ExprError(f"unknown node kind {k!r}")


# ---------------------------------------------------------------------------
# zero testing

@dataclass(frozen=True)
class ZeroVerdict:
    tag: str  # "symbolically-zero" | "numerically-zero" | "nonzero"
    probes: int = 0
    max_residual: float = 0.0
    witness: dict | None = None
    residual: float = 0.0

    @property
    def is_zero(self):
        return self.tag != "nonzero"

    def describe(self):
        if self.tag == "symbolically-zero":
            return self.tag
        if self.tag == "numerically-zero":
            return f"{self.tag} ({self.probes} probes, max residual {self.max_residual:.3e})"
        return f"nonzero (residual {self.residual:.3e} at {self.witness})"


def default_seed():
    return int(os.environ.get("HJDYN_SEED", "0"))


def _random_cubic(rng):
    c = rng.uniform(-1.0, 1.0, size=4)
    x = Sym("x")
    return ("x", Add(Const(c[0]), Mul(Const(c[1]), x),
                     Mul(Const(c[2]), Pow(x, Const(2))),
                     Mul(Const(c[3]), Pow(x, Const(3)))))


def probe_bindings(exprs, rng, positive=(), funcs=None, max_tries=500):
    """Random bindings (and random cubic stand-ins for opaque functions)
    at which every expression in exprs evaluates without domain errors."""
    funcs = dict(funcs or {})
    syms = set()
    fnames = set()
    sqrt_syms = set()
    for e in exprs:
        syms |= free_symbols(e)
        fnames |= free_functions(e)
        sqrt_syms |= symbols_under_sqrt(e)
    opaque = sorted(fnames - set(funcs))
    positive = set(positive)
    for _ in range(max_tries):
        b = {}
        for s in sorted(syms):
            if s in positive or s in sqrt_syms:
                b[s] = rng.uniform(0.1, 2.0)
            else:
                b[s] = rng.uniform(-1.0, 1.0)
        fd = dict(funcs)
        for name in opaque:
            fd[name] = _random_cubic(rng)
        try:
            vals = [evaluate(e, b, fd) for e in exprs]
        except DomainError:
            continue
        return b, fd, vals
    raise EvalError("could not find a valid probe point")


#: default numeric threshold for zero-testing; the CLI --tol-zero flag
#: overrides it process-wide.
DEFAULT_ZERO_TOL = 1e-9


def is_zero(e, positive=(), funcs=None, seed=None, probes=20, tol=None):
    """Decide whether e vanishes identically.

    Symbolically zero if the (expanding) simplifier reduces it to the literal
    constant 0; otherwise probes random points.  Opaque named functions are
    replaced per-probe by random cubic polynomials.
    """
    if tol is None:
        tol = DEFAULT_ZERO_TOL
    s = simplify(e, positive, expand=True)
    if s.kind == "const":
        if s.value == 0.0:
            return ZeroVerdict("symbolically-zero")
        if abs(s.value) < tol:
            return ZeroVerdict("numerically-zero", 1, abs(s.value))
        return ZeroVerdict("nonzero", witness={}, residual=s.value)
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    max_r = 0.0
    for _ in range(probes):
        b, fd, vals = probe_bindings([s], rng, positive, funcs)
        r = vals[0]
        if abs(r) >= tol:
            return ZeroVerdict("nonzero", witness=b, residual=r)
        max_r = max(max_r, abs(r))
    return ZeroVerdict("numerically-zero", probes, max_r)


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*'*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(text):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", i)
        tokens.append((m.lastgroup, m.group(), i))
        i = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text, known_functions=None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.known = known_functions

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, val):
        kind, v, off = self.next()
        if v != val:
            raise ParseError(f"expected {val!r}, found {v!r}", off)

    def parse(self):
        e = self.expr()
        kind, v, off = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {v!r}", off)
        return e

    def expr(self):
        kind, v, _ = self.peek()
        if v == "-":
            self.next()
            e = Neg(self.term())
        else:
            e = self.term()
        while True:
            kind, v, _ = self.peek()
            if v == "+":
                self.next()
                e = Expr("sum", (e, self.term()))
            elif v == "-":
                self.next()
                e = Expr("sum", (e, Neg(self.term())))
            else:
                return e

    def term(self):
        e = self.factor()
        while True:
            kind, v, _ = self.peek()
            if v == "*":
                self.next()
                e = Expr("prod", (e, self.factor()))
            elif v == "/":
                self.next()
                e = Expr("prod", (e, Pow(self.factor(), Const(-1))))
            else:
                return e

    def factor(self):
        b = self.base()
        kind, v, _ = self.peek()
        if v == "^":
            self.next()
            return Pow(b, self.exponent())
        return b

    def exponent(self):
        kind, v, _ = self.peek()
        if v == "-":
            self.next()
            return Neg(self.factor())
        return self.factor()

    def base(self):
        kind, v, off = self.next()
        if kind == "num":
            return Const(float(v))
        if v == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            primes = len(v) - len(v.rstrip("'"))
            name = v.rstrip("'")
            nk, nv, _ = self.peek()
            if nv == "(":
                self.next()
                arg = self.expr()
                self.expect(")")
                if name == "sqrt":
                    if primes:
                        raise ParseError("sqrt cannot carry primes", off)
                    return Sqrt(arg)
                if self.known is not None and name not in self.known:
                    raise ParseError(f"unknown function {name!r}", off)
                if primes:
                    return DFunc(name, arg, primes)
                return Func(name, arg)
            if primes:
                raise ParseError("prime marks require a function application", off)
            return Sym(name)
        raise ParseError(f"unexpected token {v!r}", off)


def parse(text, known_functions=None, positive=()):
    """Parse DSL text and return the canonicalized expression."""
    ast = _Parser(text, known_functions).parse()
    return simplify(ast, positive)


# ---------------------------------------------------------------------------
# printing

def _fmt_const(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    f = Fraction(v).limit_denominator(10 ** 6)
    if float(f) == v and f.denominator != 1:
        return f"{f.numerator}/{f.denominator}"
    return repr(v)


# precedence: sum 1, prod 2, pow 3, atom 4
def to_string(e):
    return _fmt(e, 0)


def _fmt(e, prec):
    k = e.kind
    if k == "const":
        s = _fmt_const(e.value)
        need = prec >= 2 if (e.value < 0 or "/" in s) else False
        return f"({s})" if need else s
    if k == "sym":
        return e.name
    if k == "sqrt":
        return f"sqrt({_fmt(e.args[0], 0)})"
    if k == "func":
        return f"{e.name}({_fmt(e.args[0], 0)})"
    if k == "dfunc":
        primes = "'" * e.order
        return f"{e.name}{primes}({_fmt(e.args[0], 0)})"
    if k == "neg":
        inner = _fmt(e.args[0], 2)
        s = f"-{inner}"
        return f"({s})" if prec >= 2 else s
    if k == "pow":
        b, x = e.args
        if x.kind == "const" and x.value < 0:
            return _fmt_ratio(1.0, [], [(b, -x.value)], prec)
        bs = _fmt(b, 3)
        if x.kind == "const":
            xs = _fmt_const(x.value)
            if "/" in xs or x.value < 0:
                xs = f"({xs})"
        else:
            xs = _fmt(x, 3)
        return f"{bs}^{xs}"
    if k == "prod":
        coeff = 1.0
        num = []
        den = []
        for f in e.args:
            if f.kind == "const":
                coeff *= f.value
            elif f.kind == "pow" and f.args[1].kind == "const" \
                    and f.args[1].value < 0:
                den.append((f.args[0], -f.args[1].value))
            else:
                num.append(f)
        return _fmt_ratio(coeff, num, den, prec)
    if k == "sum":
        parts = []
        for i, t in enumerate(e.args):
            sign, body = _term_sign(t)
            if i == 0:
                parts.append(f"-{body}" if sign < 0 else body)
            else:
                parts.append(f" - {body}" if sign < 0 else f" + {body}")
        s = "".join(parts)
        return f"({s})" if prec >= 2 else s
    raise ExprError(f"unknown node kind {k!r}")


def _pow_str(base, ex):
    if ex == 1.0:
        return _fmt(base, 3)
    if ex == 0.5:
        return f"sqrt({_fmt(base, 0)})"
    xs = _fmt_const(ex)
    if "/" in xs:
        xs = f"({xs})"
    return f"{_fmt(base, 3)}^{xs}"


def _fmt_ratio(coeff, num, den, prec):
    sign = ""
    if coeff < 0:
        sign = "-"
        coeff = -coeff
    num_parts = [_fmt(f, 2) for f in num]
    cs = _fmt_const(coeff)
    if coeff != 1.0 or not num_parts:
        if "/" in cs:
            # print e.g. 1/2*x^2 as x^2/2
            fr = Fraction(coeff).limit_denominator(10 ** 6)
            if fr.numerator != 1:
                num_parts.insert(0, str(fr.numerator))
            den = [(Const(fr.denominator), 1.0)] + den
            if not num_parts:
                num_parts = ["1"]
        else:
            num_parts.insert(0, cs)
    ns = "*".join(num_parts)
    if not den:
        s = ns
    else:
        den_parts = [_pow_str(b, x) for b, x in den]
        if len(den_parts) == 1 and _is_simple_den(den[0]):
            ds = den_parts[0]
        else:
            ds = "(" + "*".join(den_parts) + ")"
        s = f"{ns}/{ds}"
    s = sign + s
    if prec >= 2 and (sign or (not den and len(num_parts) == 1 and not ns)):
        return f"({s})"
    if prec >= 3 or (prec >= 2 and (sign or "/" in s or "*" in s)):
        return f"({s})"
    return s


def _is_simple_den(bx):
    b, x = bx
    if x not in (1.0, 0.5) and b.kind not in ("sym", "const"):
        return False
    return b.kind in ("sym", "const", "func", "dfunc", "sqrt") or x == 0.5


def _term_sign(t):
    """Return (sign, string of the absolute-value part) for a sum term."""
    if t.kind == "const":
        if t.value < 0:
            return -1, _fmt(Const(-t.value), 1)
        return 1, _fmt(t, 1)
    if t.kind == "prod":
        coeff = 1.0
        rest = []
        for f in t.args:
            if f.kind == "const":
                coeff *= f.value
            else:
                rest.append(f)
        if coeff < 0:
            if -coeff == 1.0 and rest:
                if len(rest) > 1:
                    body = _fmt(Expr("prod", tuple(rest)), 1)
                else:
                    body = _fmt(rest[0], 2)  # parenthesize bare sums
            else:
                body = _fmt(Expr("prod", tuple([Const(-coeff)] + rest)), 1)
            return -1, body
    return 1, _fmt(t, 1)


def structurally_equal(a, b, positive=()):
    """Structural identity of canonical forms."""
    return simplify(a, positive) == simplify(b, positive)
