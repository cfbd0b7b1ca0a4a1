"""
Equality elimination ahead of the solvers.

Affine equalities are used to eliminate one variable at a time; the
elimination is substituted into every other constraint, so fixed fluent values
propagate and many products (rate times duration) become affine.  Each reduced
constraint remembers the set of original constraints it was derived from,
which is what conflict explanations are reported in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..expr import (BinOp, Comparison, Const, EvaluationError, Expr, affine, compare, evaluate,
                    fold_constants, from_affine, normalize, substitute, variables)
from .network import ConstraintNetwork

FLOAT_SLACK = 1e-9


@dataclass
class Reduced:
    expr: Expr  # constraint reads ``expr op 0``
    op: str
    origin: frozenset
    keys: frozenset = None

    def __post_init__(self):
        if self.keys is None:
            self.keys = frozenset(variables(self.expr))

    def variables(self) -> frozenset:
        return self.keys


@dataclass
class Presolved:
    constraints: list = field(default_factory=list)
    # elimination order: (variable, expression over later variables, origin)
    eliminated: list = field(default_factory=list)
    infeasible: frozenset | None = None

    def variables(self) -> list:
        seen = {}
        for c in self.constraints:
            for k in c.variables():
                seen.setdefault(k, None)
        return sorted(seen, key=repr)

    def back_substitute(self, values: dict) -> dict:
        out = dict(values)
        for key, e, _ in reversed(self.eliminated):
            for k in variables(e):
                out.setdefault(k, Fraction(0))
            out[key] = evaluate(e, out)
        return out


def _normal(c: Comparison) -> Expr:
    return fold_constants(BinOp("-", c.lhs, c.rhs))


def _simplify(e: Expr) -> Expr:
    aff = affine(e)
    if aff is not None:
        return from_affine(*aff)
    return normalize(e)


def _constant_holds(op: str, e: Expr) -> bool | None:
    """Truth of a variable-free constraint; None when it cannot be evaluated."""
    try:
        v = evaluate(e, {})
    except (EvaluationError, ZeroDivisionError, ValueError, OverflowError):
        return None
    if isinstance(v, float):
        if not math.isfinite(v):
            return None
        if abs(v) <= FLOAT_SLACK:
            return op in ("<=", ">=", "=")
    return compare(op, v, 0)


def presolve(net: ConstraintNetwork, eliminate: bool = True) -> Presolved:
    work = [Reduced(_simplify(_normal(c.comparison)), c.comparison.op, frozenset([i]))
            for i, c in enumerate(net.constraints)]
    out = Presolved()
    while True:
        # drop or refute variable-free constraints
        kept = []
        for c in work:
            if c.keys:
                kept.append(c)
                continue
            ok = _constant_holds(c.op, c.expr)
            if ok is False:
                out.infeasible = c.origin
                return out
            if ok is None:
                kept.append(c)
        work = kept
        if not eliminate:
            break
        pick = None
        for idx, c in enumerate(work):
            if c.op != "=":
                continue
            aff = affine(c.expr)
            if aff is None or not aff[0]:
                continue
            coeffs, const = aff
            # prefer equalities fixing a single variable
            rank = (len(coeffs), idx)
            if pick is None or rank < pick[0]:
                pick = (rank, idx, coeffs, const)
        if pick is None:
            break
        _, idx, coeffs, const = pick
        eq = work.pop(idx)
        key = sorted(coeffs, key=repr)[0]
        a = coeffs[key]
        rest = {k: -v / a for k, v in coeffs.items() if k != key}
        value = from_affine(rest, -const / a)
        out.eliminated.append((key, value, eq.origin))
        mapping = {key: value}
        nxt = []
        for c in work:
            if key in c.keys:
                c = Reduced(_simplify(substitute(c.expr, mapping)), c.op, c.origin | eq.origin)
            nxt.append(c)
        work = nxt
    out.constraints = work
    return out


def reduced_network(p: Presolved) -> ConstraintNetwork:
    net = ConstraintNetwork()
    for c in p.constraints:
        net.add(Comparison(c.op, c.expr, Const(Fraction(0))), "presolved", c.origin)
    return net
