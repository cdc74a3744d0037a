"""Complex expressions for Weierstrass data and arc charts.

Expressions are immutable trees over a single complex variable ``w``.  They
are parsed from a small infix grammar (see ``docs/grammar.md``), evaluated on
scalars or numpy arrays, and differentiated symbolically.

Branch conventions: ``log`` and non-integer rational powers use the principal
branch, ``Log z = ln|z| + i Arg z`` with ``Arg`` in ``(-pi, pi]``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "ComplexExpr",
    "Const",
    "Named",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Func",
    "ExprSyntaxError",
    "DomainError",
    "NonAnalyticError",
    "parse",
    "to_string",
    "evaluate",
    "differentiate",
    "is_analytic",
]

ANALYTIC_FUNCS = ("exp", "log")
NONANALYTIC_FUNCS = ("conj", "re", "im")
NAMED_CONSTANTS = {"i": 1j, "pi": math.pi}
VARIABLE = "w"


class ExprSyntaxError(ValueError):
    """Raised for malformed expression text; ``pos`` is a 0-based offset."""

    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}")


class DomainError(ArithmeticError):
    """Evaluation hit a pole or branch point."""

    def __init__(self, message: str, w):
        self.w = w
        super().__init__(f"{message} at w={w!r}")


class NonAnalyticError(ValueError):
    pass


# -- AST ---------------------------------------------------------------------


class ComplexExpr:
    """Base class of the expression tree.  Nodes are frozen dataclasses."""

    __slots__ = ()

    def __call__(self, w):
        return evaluate(self, w)

    def __str__(self):
        return to_string(self)

    # operator sugar for building expressions in code
    def __add__(self, other):
        return Add(self, _lift(other))

    def __radd__(self, other):
        return Add(_lift(other), self)

    def __sub__(self, other):
        return Sub(self, _lift(other))

    def __rsub__(self, other):
        return Sub(_lift(other), self)

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __rmul__(self, other):
        return Mul(_lift(other), self)

    def __truediv__(self, other):
        return Div(self, _lift(other))

    def __rtruediv__(self, other):
        return Div(_lift(other), self)

    def __neg__(self):
        return Neg(self)

    @property
    def children(self) -> tuple:
        return ()


def _lift(x) -> ComplexExpr:
    if isinstance(x, ComplexExpr):
        return x
    if isinstance(x, str):
        return parse(x)
    return Const(complex(x))


@dataclass(frozen=True, eq=True)
class Const(ComplexExpr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True, eq=True)
class Named(ComplexExpr):
    """Named constant: ``i`` or ``pi``."""

    name: str

    @property
    def value(self) -> complex:
        return complex(NAMED_CONSTANTS[self.name])


@dataclass(frozen=True, eq=True)
class Var(ComplexExpr):
    pass


@dataclass(frozen=True, eq=True)
class Neg(ComplexExpr):
    arg: ComplexExpr

    @property
    def children(self):
        return (self.arg,)


@dataclass(frozen=True, eq=True)
class _Binary(ComplexExpr):
    left: ComplexExpr
    right: ComplexExpr

    @property
    def children(self):
        return (self.left, self.right)


class Add(_Binary):
    pass


class Sub(_Binary):
    pass


class Mul(_Binary):
    pass


class Div(_Binary):
    pass


@dataclass(frozen=True, eq=True)
class Pow(ComplexExpr):
    """``base ^ exponent`` with a rational exponent, principal branch."""

    base: ComplexExpr
    exponent: Fraction

    @property
    def children(self):
        return (self.base,)


@dataclass(frozen=True, eq=True)
class Func(ComplexExpr):
    name: str
    arg: ComplexExpr

    @property
    def children(self):
        return (self.arg,)


# -- parser ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := ('+'|'-') unary | power
    # power  := atom ('^' unary)?
    # atom   := number | name | name '(' expr ')' | '(' expr ')'

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, pos = self.take()
        if v != value:
            found = "end of input" if kind == "end" else repr(v)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos, self.text)

    def parse(self) -> ComplexExpr:
        node = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {v!r}", pos, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        kind, v, _ = self.peek()
        if kind == "op" and v == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and v == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, v, pos = self.peek()
        if kind == "op" and v == "^":
            self.take()
            epos = self.peek()[2]
            exponent = self.unary()
            return Pow(base, _rational_exponent(exponent, epos, self.text))
        return base

    def atom(self):
        kind, v, pos = self.take()
        if kind == "num":
            return Const(float(v))
        if kind == "name":
            if v in ANALYTIC_FUNCS or v in NONANALYTIC_FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(v, arg)
            if v == VARIABLE:
                return Var()
            if v in NAMED_CONSTANTS:
                return Named(v)
            raise ExprSyntaxError(f"unknown identifier {v!r}", pos, self.text)
        if kind == "op" and v == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(v)
        raise ExprSyntaxError(f"unexpected {found}", pos, self.text)


def _rational_exponent(node: ComplexExpr, pos: int, text: str) -> Fraction:
    if _depends_on_w(node):
        raise ExprSyntaxError("exponent must be a constant", pos, text)
    value = complex(evaluate(node, 0.0))
    if value.imag != 0.0 or not math.isfinite(value.real):
        raise ExprSyntaxError("exponent must be a real rational", pos, text)
    frac = Fraction(value.real).limit_denominator(10**6)
    if abs(float(frac) - value.real) > 1e-12 * max(1.0, abs(value.real)):
        raise ExprSyntaxError("exponent must be a rational number", pos, text)
    return frac


def _depends_on_w(node: ComplexExpr) -> bool:
    if isinstance(node, Var):
        return True
    return any(_depends_on_w(c) for c in node.children)


def parse(text: str) -> ComplexExpr:
    """Parse ``text`` into an expression tree.

    >>> evaluate(parse("1/(2*pi*i*w)"), 1j)
    (-0.15915494309189535+0j)
    """
    return _Parser(text).parse()


# -- printer -----------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _fmt_real(x: float) -> str:
    s = repr(float(x))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _fmt_fraction(f: Fraction) -> str:
    if f.denominator == 1:
        return str(f.numerator) if f.numerator >= 0 else f"({f.numerator})"
    return f"({f.numerator}/{f.denominator})"


def _prec(node) -> int:
    if isinstance(node, Const):
        v = node.value
        if v.imag == 0.0 and v.real >= 0 and not math.copysign(1.0, v.real) < 0:
            return 5
        return 0
    return _PREC.get(type(node), 5)


def to_string(node: ComplexExpr) -> str:
    """Canonical text form; ``parse(to_string(e)) == e`` for parsed trees."""
    if isinstance(node, Const):
        v = node.value
        if v.imag == 0.0 and v.real >= 0 and math.copysign(1.0, v.real) > 0:
            return _fmt_real(v.real)
        if v.real == 0.0 and v.imag >= 0:
            return f"{_fmt_real(v.imag)}*i"
        return f"({_fmt_real(v.real)}+({_fmt_real(v.imag)})*i)" if v.imag else f"(-{_fmt_real(-v.real)})"
    if isinstance(node, Named):
        return node.name
    if isinstance(node, Var):
        return VARIABLE
    if isinstance(node, Func):
        return f"{node.name}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        if _prec(node.arg) < _PREC[Neg]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Pow):
        base = to_string(node.base)
        if _prec(node.base) <= _PREC[Pow]:
            base = f"({base})"
        return f"{base}^{_fmt_fraction(node.exponent)}"
    p = _PREC[type(node)]
    left = to_string(node.left)
    right = to_string(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    # left-associative: equal precedence on the right needs parentheses
    if _prec(node.right) <= p:
        right = f"({right})"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
    return f"{left}{op}{right}"


# -- evaluation ----------------------------------------------------------------


def _int_power(z, k: int):
    if k == 0:
        return np.ones_like(z) if isinstance(z, np.ndarray) else complex(1.0)
    result = None
    base = z
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return result


def _bad_w(w, mask):
    if np.ndim(w) == 0:
        return complex(w)
    return complex(np.asarray(w)[mask].ravel()[0]) if np.any(mask) else complex(np.asarray(w).ravel()[0])


def _eval(node, w):
    if isinstance(node, Var):
        return w
    if isinstance(node, (Const, Named)):
        return node.value
    if isinstance(node, Add):
        return _eval(node.left, w) + _eval(node.right, w)
    if isinstance(node, Sub):
        return _eval(node.left, w) - _eval(node.right, w)
    if isinstance(node, Mul):
        return _eval(node.left, w) * _eval(node.right, w)
    if isinstance(node, Neg):
        return -_eval(node.arg, w)
    if isinstance(node, Div):
        num = _eval(node.left, w)
        den = _eval(node.right, w)
        zero = np.asarray(den) == 0
        if np.any(zero):
            raise DomainError("division by zero (pole)", _bad_w(w, np.broadcast_to(zero, np.shape(w))))
        return num / den
    if isinstance(node, Pow):
        base = _eval(node.base, w)
        e = node.exponent
        if e.denominator == 1:
            k = e.numerator
            if k < 0:
                zero = np.asarray(base) == 0
                if np.any(zero):
                    raise DomainError("negative power of zero (pole)", _bad_w(w, np.broadcast_to(zero, np.shape(w))))
                return 1.0 / _int_power(base, -k)
            return _int_power(base, k)
        base = np.asarray(base, dtype=complex)
        zero = base == 0
        if np.any(zero):
            if e < 0:
                raise DomainError("branch point of a negative power", _bad_w(w, np.broadcast_to(zero, np.shape(w))))
            out = np.where(zero, 0.0, np.exp(float(e) * np.log(np.where(zero, 1.0, base))))
        else:
            out = np.exp(float(e) * np.log(base))
        return out if out.ndim else complex(out)
    if isinstance(node, Func):
        a = _eval(node.arg, w)
        if node.name == "exp":
            return np.exp(a)
        if node.name == "log":
            zero = np.asarray(a) == 0
            if np.any(zero):
                raise DomainError("logarithm of zero", _bad_w(w, np.broadcast_to(zero, np.shape(w))))
            return np.log(np.asarray(a, dtype=complex)) if np.ndim(a) else complex(np.log(complex(a)))
        if node.name == "conj":
            return np.conj(a)
        if node.name == "re":
            return np.real(a) + 0j
        if node.name == "im":
            return np.imag(a) + 0j
    raise TypeError(f"unknown node {node!r}")


def evaluate(node: ComplexExpr, w):
    """Evaluate at a complex scalar or array ``w``.

    Raises :class:`DomainError` (carrying the offending ``w``) at poles and
    branch points.
    """
    scalar = np.ndim(w) == 0
    wa = complex(w) if scalar else np.asarray(w, dtype=complex)
    with np.errstate(all="ignore"):
        out = _eval(node, wa)
    if scalar:
        return complex(out)
    return np.broadcast_to(np.asarray(out, dtype=complex), wa.shape).copy()


# -- differentiation -----------------------------------------------------------


def is_analytic(node: ComplexExpr) -> bool:
    """True when the tree holds no conjugation or real/imaginary-part nodes."""
    if isinstance(node, Func) and node.name in NONANALYTIC_FUNCS:
        return False
    return all(is_analytic(c) for c in node.children)


def _is_const(node, value) -> bool:
    return isinstance(node, Const) and node.value == value


def _add(a, b):
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def _mul(a, b):
    if _is_const(a, 0) or _is_const(b, 0):
        return Const(0)
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Mul(a, b)


def _d(node):
    if isinstance(node, Var):
        return Const(1)
    if isinstance(node, (Const, Named)):
        return Const(0)
    if isinstance(node, Neg):
        d = _d(node.arg)
        return Const(0) if _is_const(d, 0) else Neg(d)
    if isinstance(node, Add):
        return _add(_d(node.left), _d(node.right))
    if isinstance(node, Sub):
        dl, dr = _d(node.left), _d(node.right)
        if _is_const(dr, 0):
            return dl
        return Sub(dl, dr) if not _is_const(dl, 0) else Neg(dr)
    if isinstance(node, Mul):
        return _add(_mul(_d(node.left), node.right), _mul(node.left, _d(node.right)))
    if isinstance(node, Div):
        u, v = node.left, node.right
        du, dv = _d(u), _d(v)
        if _is_const(dv, 0):
            return Const(0) if _is_const(du, 0) else Div(du, v)
        num = Sub(_mul(du, v), _mul(u, dv)) if not _is_const(du, 0) else Neg(_mul(u, dv))
        return Div(num, Pow(v, Fraction(2)))
    if isinstance(node, Pow):
        du = _d(node.base)
        if _is_const(du, 0) or node.exponent == 0:
            return Const(0)
        e = node.exponent
        lowered = node.base if e - 1 == 1 else Pow(node.base, e - 1)
        if e - 1 == 0:
            return _mul(Const(float(e)), du)
        return _mul(_mul(Const(float(e)), lowered), du)
    if isinstance(node, Func):
        if node.name in NONANALYTIC_FUNCS:
            raise NonAnalyticError(f"{node.name}() is not complex differentiable")
        du = _d(node.arg)
        if node.name == "exp":
            return _mul(node, du)
        if node.name == "log":
            return Div(du, node.arg) if not _is_const(du, 0) else Const(0)
    raise TypeError(f"unknown node {node!r}")


def differentiate(node: ComplexExpr) -> ComplexExpr:
    """Symbolic complex derivative d/dw."""
    if not is_analytic(node):
        raise NonAnalyticError(f"expression is not analytic: {to_string(node)}")
    return _d(node)
