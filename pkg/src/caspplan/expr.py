"""
Numeric expression trees shared by the frontend, the encoder and the solvers.

Leaves are exact constants (``Fraction``) and variables keyed by any hashable
term.  The same node types describe PDDL+ numeric expressions (variables keyed
by fluent terms, ``?duration`` and ``#t``) and CSP constraints (variables keyed
by encoding terms such as ``("v_final", fluent, 3)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Union

Number = Union[Fraction, float, int]

COMPARATORS = ("<", "<=", "=", "!=", ">=", ">")

_COMPLEMENT = {"<": ">=", "<=": ">", "=": "!=", "!=": "=", ">=": "<", ">": "<="}
_MIRROR = {"<": ">", "<=": ">=", "=": "=", "!=": "!=", ">=": "<=", ">": "<"}


class Expr:
    """Base class; nodes are immutable and hashable."""

    __slots__ = ()

    def __add__(self, other):
        return BinOp("+", self, as_expr(other))

    def __radd__(self, other):
        return BinOp("+", as_expr(other), self)

    def __sub__(self, other):
        return BinOp("-", self, as_expr(other))

    def __rsub__(self, other):
        return BinOp("-", as_expr(other), self)

    def __mul__(self, other):
        return BinOp("*", self, as_expr(other))

    def __rmul__(self, other):
        return BinOp("*", as_expr(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, as_expr(other))

    def __neg__(self):
        return UnOp("neg", self)


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def __repr__(self):
        return f"Const({self.value})"


@dataclass(frozen=True)
class Var(Expr):
    key: Hashable

    def __repr__(self):
        return f"Var({self.key!r})"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * / ^
    left: Expr
    right: Expr


@dataclass(frozen=True)
class UnOp(Expr):
    op: str  # neg | sqrt
    arg: Expr


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    if isinstance(x, float):
        return Const(Fraction(x))
    raise TypeError(f"cannot convert {x!r} to an expression")


def const(x) -> Const:
    return Const(Fraction(x))


def sqrt(e: Expr) -> Expr:
    return UnOp("sqrt", e)


@dataclass(frozen=True)
class Comparison:
    """``lhs op rhs`` with op in :data:`COMPARATORS`."""

    op: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.op not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")

    def complement(self) -> "Comparison":
        return Comparison(_COMPLEMENT[self.op], self.lhs, self.rhs)

    def mirrored(self) -> "Comparison":
        return Comparison(_MIRROR[self.op], self.rhs, self.lhs)

    def map(self, fn: Callable[[Expr], Expr]) -> "Comparison":
        return Comparison(self.op, fn(self.lhs), fn(self.rhs))

    def variables(self) -> set:
        return variables(self.lhs) | variables(self.rhs)


# -- traversal -----------------------------------------------------------------

def variables(e: Expr) -> set:
    out: set = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            out.add(n.key)
        elif isinstance(n, BinOp):
            stack.append(n.left)
            stack.append(n.right)
        elif isinstance(n, UnOp):
            stack.append(n.arg)
    return out


def substitute(e: Expr, mapping: Mapping[Hashable, Expr]) -> Expr:
    """Replace variables found in ``mapping``; other nodes are rebuilt only if needed."""
    if isinstance(e, Var):
        return mapping.get(e.key, e)
    if isinstance(e, BinOp):
        left = substitute(e.left, mapping)
        right = substitute(e.right, mapping)
        if left is e.left and right is e.right:
            return e
        return BinOp(e.op, left, right)
    if isinstance(e, UnOp):
        arg = substitute(e.arg, mapping)
        return e if arg is e.arg else UnOp(e.op, arg)
    return e


def map_keys(e: Expr, fn: Callable[[Hashable], Hashable]) -> Expr:
    """Rename every variable key through ``fn``."""
    if isinstance(e, Var):
        return Var(fn(e.key))
    if isinstance(e, BinOp):
        return BinOp(e.op, map_keys(e.left, fn), map_keys(e.right, fn))
    if isinstance(e, UnOp):
        return UnOp(e.op, map_keys(e.arg, fn))
    return e


# -- evaluation ----------------------------------------------------------------

class EvaluationError(ArithmeticError):
    pass


def _sqrt(x: Number) -> Number:
    if x < 0:
        raise EvaluationError("sqrt of negative value")
    if isinstance(x, Fraction):
        n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if n * n == x.numerator and d * d == x.denominator:
            return Fraction(n, d)
    return math.sqrt(x)


def _pow(x: Number, y: Number) -> Number:
    if isinstance(y, Fraction) and y.denominator == 1:
        if y < 0 and x == 0:
            raise EvaluationError("zero to a negative power")
        if isinstance(x, Fraction):
            return x ** int(y)
        return float(x) ** int(y)
    if x < 0:
        raise EvaluationError("fractional power of negative value")
    return float(x) ** float(y)


def evaluate(e: Expr, env: Mapping[Hashable, Number]) -> Number:
    """Evaluate exactly when the inputs are rationals; floats propagate."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.key]
        except KeyError:
            raise EvaluationError(f"unbound variable {e.key!r}") from None
    if isinstance(e, UnOp):
        a = evaluate(e.arg, env)
        if e.op == "neg":
            return -a
        return _sqrt(a)
    a = evaluate(e.left, env)
    b = evaluate(e.right, env)
    if isinstance(a, float) or isinstance(b, float):
        a, b = float(a), float(b)
    op = e.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise EvaluationError("division by zero")
        return a / b
    return _pow(a, b)


def compare(op: str, a: Number, b: Number) -> bool:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == ">=":
        return a >= b
    return a > b


# -- affine forms --------------------------------------------------------------

Affine = tuple  # (dict key -> Fraction, Fraction constant)


def affine(e: Expr) -> Affine | None:
    """Return ``(coeffs, constant)`` if ``e`` is affine in its variables, else None."""
    if isinstance(e, Const):
        return {}, e.value
    if isinstance(e, Var):
        return {e.key: Fraction(1)}, Fraction(0)
    if isinstance(e, UnOp):
        inner = affine(e.arg)
        if inner is None:
            return None
        if e.op == "neg":
            return {k: -v for k, v in inner[0].items()}, -inner[1]
        if inner[0]:
            return None
        try:
            r = _sqrt(inner[1])
        except EvaluationError:
            return None
        return ({}, r) if isinstance(r, Fraction) else None
    left = affine(e.left)
    if left is None:
        return None
    right = affine(e.right)
    if right is None:
        return None
    (lc, lk), (rc, rk) = left, right
    op = e.op
    if op in "+-":
        sign = 1 if op == "+" else -1
        out = dict(lc)
        for k, v in rc.items():
            out[k] = out.get(k, Fraction(0)) + sign * v
        return {k: v for k, v in out.items() if v != 0}, lk + sign * rk
    if op == "*":
        if lc and rc:
            return None
        if not lc:
            return {k: lk * v for k, v in rc.items() if lk * v != 0}, lk * rk
        return {k: rk * v for k, v in lc.items() if rk * v != 0}, lk * rk
    if op == "/":
        if rc or rk == 0:
            return None
        return {k: v / rk for k, v in lc.items()}, lk / rk
    # power
    if rc or lc and not (rk.denominator == 1 and rk in (0, 1)):
        return None
    if not lc:
        try:
            r = _pow(lk, rk)
        except EvaluationError:
            return None
        return ({}, r) if isinstance(r, Fraction) else None
    if rk == 1:
        return lc, lk
    return {}, Fraction(1)


def from_affine(coeffs: Mapping[Hashable, Fraction], constant: Fraction) -> Expr:
    terms: list[Expr] = []
    for k in sorted(coeffs, key=repr):
        c = coeffs[k]
        if c == 0:
            continue
        terms.append(Var(k) if c == 1 else BinOp("*", Const(c), Var(k)))
    if constant != 0 or not terms:
        terms.append(Const(constant))
    out = terms[0]
    for t in terms[1:]:
        out = BinOp("+", out, t)
    return out


def is_constant(e: Expr) -> bool:
    return not variables(e)


def fold_constants(e: Expr) -> Expr:
    """Collapse constant subtrees into exact constants where arithmetic stays rational."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, UnOp):
        arg = fold_constants(e.arg)
        if isinstance(arg, Const):
            try:
                v = evaluate(UnOp(e.op, arg), {})
            except EvaluationError:
                return UnOp(e.op, arg)
            if isinstance(v, Fraction):
                return Const(v)
        return e if arg is e.arg else UnOp(e.op, arg)
    left = fold_constants(e.left)
    right = fold_constants(e.right)
    if isinstance(left, Const) and isinstance(right, Const):
        try:
            v = evaluate(BinOp(e.op, left, right), {})
        except EvaluationError:
            v = None
        if isinstance(v, Fraction):
            return Const(v)
    if e.op == "*":
        for a, b in ((left, right), (right, left)):
            if isinstance(a, Const) and a.value == 1:
                return b
            if isinstance(a, Const) and a.value == 0:
                return Const(Fraction(0))
    if e.op in "+-" and isinstance(right, Const) and right.value == 0:
        return left
    if e.op == "+" and isinstance(left, Const) and left.value == 0:
        return right
    if left is e.left and right is e.right:
        return e
    return BinOp(e.op, left, right)


# -- rendering -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def format_number(v: Number) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        f = float(v)
        if Fraction(repr(f)) == v:
            return repr(f)
        return f"{v.numerator}/{v.denominator}"
    return repr(v)


def render_infix(e: Expr, var: Callable[[Hashable], str], _parent: int = 0) -> str:
    """Infix rendering used by the CASP text emitter and diagnostics."""
    if isinstance(e, Const):
        s = format_number(e.value)
        return f"({s})" if e.value < 0 and _parent else s
    if isinstance(e, Var):
        return var(e.key)
    if isinstance(e, UnOp):
        if e.op == "neg":
            return "-" + render_infix(e.arg, var, 3)
        return f"sqrt({render_infix(e.arg, var)})"
    p = _PREC[e.op]
    left = render_infix(e.left, var, p)
    # right operand of - and / needs brackets at equal precedence
    right = render_infix(e.right, var, p + (1 if e.op in "-/^" else 0))
    s = f"{left}{'**' if e.op == '^' else e.op}{right}"
    return f"({s})" if p < _parent else s


# -- polynomial normal form ------------------------------------------------------

MAX_EXPANDED_POWER = 8


def _poly_add(p, q, sign=1):
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, Fraction(0)) + sign * c
        if v == 0:
            out.pop(m, None)
        else:
            out[m] = v
    return out


def _mono_mul(m1, m2):
    powers = dict(m1)
    for f, k in m2:
        powers[f] = powers.get(f, 0) + k
    return tuple(sorted(powers.items(), key=lambda fk: repr(fk[0])))


def _poly_mul(p, q):
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, Fraction(0)) + c1 * c2
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
    return out


def _opaque(e: Expr):
    return {((e, 1),): Fraction(1)}


def polynomial(e: Expr) -> dict:
    """
    Expand ``e`` into ``{monomial: coefficient}``.  Monomials are sorted tuples
    of ``(factor, power)``; factors are variables or non-polynomial subtrees
    (themselves normalised).
    """
    if isinstance(e, Const):
        return {(): e.value} if e.value != 0 else {}
    if isinstance(e, Var):
        return _opaque(e)
    if isinstance(e, UnOp):
        if e.op == "neg":
            return {m: -c for m, c in polynomial(e.arg).items()}
        arg = normalize(e.arg)
        folded = fold_constants(UnOp(e.op, arg))
        if isinstance(folded, Const):
            return polynomial(folded)
        return _opaque(UnOp(e.op, arg))
    left = polynomial(e.left)
    if e.op in "+-":
        return _poly_add(left, polynomial(e.right), 1 if e.op == "+" else -1)
    if e.op == "*":
        return _poly_mul(left, polynomial(e.right))
    right = polynomial(e.right)
    right_const = not right or list(right) == [()]
    if e.op == "/" and right_const and right:
        k = right[()]
        return {m: c / k for m, c in left.items()}
    if e.op == "^" and right_const:
        k = right.get((), Fraction(0))
        if k.denominator == 1 and 0 <= k <= MAX_EXPANDED_POWER:
            out = {(): Fraction(1)}
            for _ in range(int(k)):
                out = _poly_mul(out, left)
            return out
    node = fold_constants(BinOp(e.op, _from_poly(left), _from_poly(right)))
    if isinstance(node, Const):
        return polynomial(node)
    return _opaque(node)


def _from_poly(p: dict) -> Expr:
    terms = []
    for m in sorted(p, key=repr):
        c = p[m]
        factors = []
        for f, k in m:
            factors.append(f if k == 1 else BinOp("^", f, Const(Fraction(k))))
        t = None
        for f in factors:
            t = f if t is None else BinOp("*", t, f)
        if t is None:
            t = Const(c)
        elif c == -1:
            t = UnOp("neg", t)
        elif c != 1:
            t = BinOp("*", Const(c), t)
        terms.append(t)
    if not terms:
        return Const(Fraction(0))
    out = terms[0]
    for t in terms[1:]:
        out = BinOp("+", out, t)
    return out


def normalize(e: Expr) -> Expr:
    """Canonical expanded form: equal polynomials normalise to identical trees."""
    return _from_poly(polynomial(e))
