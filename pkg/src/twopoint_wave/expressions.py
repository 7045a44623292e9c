"""Evaluable scalar functions of ``x`` and ``t`` for problem data.

Two kinds of function objects are supported:

* :class:`Expr` -- a parsed arithmetic expression over ``x`` and ``t`` with
  ``+ - * / ^``, ``exp``, ``sin``, ``cos`` and parentheses.  The source text is
  kept, so configs serialize back to exactly what was read.
* :class:`Tabulated` -- samples of one variable, linearly interpolated.

Both are immutable, hashable and evaluate elementwise on numpy arrays.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

__all__ = [
    "Expr",
    "ExpressionError",
    "Tabulated",
    "Function",
    "as_function",
    "constant",
    "polynomial",
    "exponential",
    "function_sum",
    "function_product",
    "zero",
]


class ExpressionError(ValueError):
    """Raised for malformed or disallowed expression text."""


_FUNCTIONS = {"exp": np.exp, "sin": np.sin, "cos": np.cos}
_CONSTANTS = {"e": np.e, "pi": np.pi}
_VARIABLES = ("x", "t")
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARYOPS = (ast.UAdd, ast.USub)


def _check_node(node: ast.AST, text: str) -> None:
    if isinstance(node, ast.Expression):
        _check_node(node.body, text)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed in {text!r}")
        _check_node(node.left, text)
        _check_node(node.right, text)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _UNARYOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed in {text!r}")
        _check_node(node.operand, text)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError(f"unknown function in {text!r}; allowed: {sorted(_FUNCTIONS)}")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument in {text!r}")
        _check_node(node.args[0], text)
    elif isinstance(node, ast.Name):
        if node.id not in _VARIABLES and node.id not in _CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"non-numeric literal in {text!r}")
    else:
        raise ExpressionError(f"syntax element {type(node).__name__} not allowed in {text!r}")


def _broadcast(value: Any, x: Any, t: Any) -> Any:
    if np.ndim(x) == 0 and np.ndim(t) == 0:
        return float(value)
    shape = np.broadcast_shapes(np.shape(x), np.shape(t))
    return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()


@dataclass(frozen=True)
class Expr:
    """Arithmetic expression in ``x`` and ``t``.

    ``^`` is accepted as a power operator.  Names ``e`` and ``pi`` are
    constants.

    >>> Expr("exp(3-2*t)")(t=1.0) == np.exp(1.0)
    True
    """

    text: str
    _code: Any = field(init=False, repr=False, compare=False, hash=False)
    _names: frozenset = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not isinstance(self.text, str) or not self.text.strip():
            raise ExpressionError("expression text must be a non-empty string")
        src = self.text.replace("^", "**")
        try:
            tree = ast.parse(src.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.text!r}: {exc.msg}") from None
        _check_node(tree, self.text)
        names = frozenset(
            n.id for n in ast.walk(tree) if isinstance(n, ast.Name) and n.id in _VARIABLES
        )
        object.__setattr__(self, "_code", compile(tree, "<expr>", "eval"))
        object.__setattr__(self, "_names", names)

    @property
    def variables(self) -> frozenset:
        return self._names

    def __call__(self, x: Any = 0.0, t: Any = 0.0) -> Any:
        scope = {"x": x, "t": t, **_FUNCTIONS, **_CONSTANTS}
        with np.errstate(over="ignore"):
            value = eval(self._code, {"__builtins__": {}}, scope)
        return _broadcast(value, x, t)

    def to_config(self) -> str:
        return self.text

    def __reduce__(self):
        return (Expr, (self.text,))

    def __add__(self, other: "Expr") -> "Expr":
        return function_sum(self, other)

    def __mul__(self, other: "Expr") -> "Expr":
        return function_product(self, other)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolant of samples in one variable.

    Outside the sampled range the end values are held constant.
    """

    variable: str
    points: tuple
    values: tuple

    def __post_init__(self) -> None:
        if self.variable not in _VARIABLES:
            raise ExpressionError(f"tabulated variable must be 'x' or 't', got {self.variable!r}")
        pts = tuple(float(v) for v in self.points)
        vals = tuple(float(v) for v in self.values)
        if len(pts) < 2 or len(pts) != len(vals):
            raise ExpressionError("tabulated function needs >= 2 points and matching values")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ExpressionError("tabulated points must be strictly increasing")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def variables(self) -> frozenset:
        return frozenset({self.variable})

    def __call__(self, x: Any = 0.0, t: Any = 0.0) -> Any:
        arg = x if self.variable == "x" else t
        value = np.interp(arg, self.points, self.values)
        return _broadcast(value, x, t)

    def to_config(self) -> dict:
        return {"tabulated": self.variable, "points": list(self.points), "values": list(self.values)}


Function = Union[Expr, Tabulated]


def as_function(obj: Any) -> Function:
    """Coerce a number, string, mapping or function object to a data function."""
    if isinstance(obj, (Expr, Tabulated)):
        return obj
    if isinstance(obj, bool):
        raise ExpressionError("booleans are not valid functions")
    if isinstance(obj, (int, float)):
        return constant(obj)
    if isinstance(obj, str):
        return Expr(obj)
    if isinstance(obj, dict) and "tabulated" in obj:
        extra = set(obj) - {"tabulated", "points", "values"}
        if extra:
            raise ExpressionError(f"unexpected keys in tabulated function: {sorted(extra)}")
        return Tabulated(obj["tabulated"], tuple(obj.get("points", ())), tuple(obj.get("values", ())))
    raise ExpressionError(f"cannot interpret {obj!r} as a function")


def _num(c: float) -> str:
    text = repr(float(c))
    return f"({text})" if text.startswith("-") else text


def constant(c: float) -> Expr:
    return Expr(_num(c))


def zero() -> Expr:
    return Expr("0.0")


def polynomial(coeffs, variable: str = "x") -> Expr:
    """``coeffs[0] + coeffs[1]*v + coeffs[2]*v^2 + ...``"""
    if variable not in _VARIABLES:
        raise ExpressionError(f"unknown variable {variable!r}")
    coeffs = list(coeffs)
    if not coeffs:
        return zero()
    terms = [_num(coeffs[0])]
    for k, c in enumerate(coeffs[1:], start=1):
        terms.append(f"{_num(c)}*{variable}^{k}" if k > 1 else f"{_num(c)}*{variable}")
    return Expr(" + ".join(terms))


def exponential(amplitude: float, rate_x: float = 0.0, rate_t: float = 0.0, shift: float = 0.0) -> Expr:
    """``amplitude * exp(shift + rate_x*x + rate_t*t)``"""
    return Expr(f"{_num(amplitude)}*exp({_num(shift)} + {_num(rate_x)}*x + {_num(rate_t)}*t)")


def function_sum(*parts: Expr) -> Expr:
    return Expr(" + ".join(f"({as_function(p).text})" for p in parts))


def function_product(*parts: Expr) -> Expr:
    return Expr("*".join(f"({as_function(p).text})" for p in parts))
