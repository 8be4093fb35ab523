"""hjdyn: canonical analysis, integration and quantization of singular
Lagrangian systems with weakly vanishing Hamiltonian."""

from .expr import (
    Expr, Const, Sym, Add, Mul, Pow, Neg, Sqrt, Func, DFunc,
    parse, to_string, simplify, differentiate, evaluate, is_zero,
    ZeroVerdict, ExprError, ParseError, EvalError, DomainError,
)

__all__ = [
    "Expr", "Const", "Sym", "Add", "Mul", "Pow", "Neg", "Sqrt", "Func",
    "DFunc", "parse", "to_string", "simplify", "differentiate", "evaluate",
    "is_zero", "ZeroVerdict", "ExprError", "ParseError", "EvalError",
    "DomainError",
]

__version__ = "0.1.0"
