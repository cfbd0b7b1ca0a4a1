"""
Constraint networks over exact expression trees, solutions, and residual checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..expr import Comparison, EvaluationError, affine, evaluate, variables

DEFAULT_LOWER = Fraction(-10**9)
DEFAULT_UPPER = Fraction(10**9)
DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class Constraint:
    """A comparison plus where it came from (the body literals of its rule)."""

    comparison: Comparison
    family: str = ""
    origin: frozenset = frozenset()

    def variables(self) -> set:
        return self.comparison.variables()


@dataclass
class ConstraintNetwork:
    constraints: list = field(default_factory=list)
    lower: Fraction = DEFAULT_LOWER
    upper: Fraction = DEFAULT_UPPER
    # variable key -> (lo, hi) overriding the default domain
    domains: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add(self, comparison: Comparison, family: str = "", origin=frozenset()) -> None:
        self.constraints.append(Constraint(comparison, family, frozenset(origin)))

    def variables(self) -> list:
        seen = {}
        for c in self.constraints:
            for k in c.variables():
                seen.setdefault(k, None)
        return sorted(seen, key=repr)

    def domain(self, key) -> tuple:
        return self.domains.get(key, (self.lower, self.upper))

    def copy(self) -> "ConstraintNetwork":
        return ConstraintNetwork(list(self.constraints), self.lower, self.upper,
                                 dict(self.domains), dict(self.meta))

    def __len__(self):
        return len(self.constraints)


@dataclass
class NumericSolution:
    values: dict
    residual: float = 0.0
    method: str = ""
    stats: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


@dataclass
class SolveResult:
    """Outcome of a solver call: ``sat`` with a solution, ``unsat`` or ``unknown``."""

    status: str
    solution: NumericSolution | None = None
    # indices into net.constraints forming an infeasible core (best effort)
    core: tuple = ()
    stats: dict = field(default_factory=dict)

    @property
    def sat(self) -> bool:
        return self.status == "sat"


def classify(net: ConstraintNetwork) -> str:
    for c in net.constraints:
        if affine(c.comparison.lhs) is None or affine(c.comparison.rhs) is None:
            return "nonlinear"
    return "linear"


def violation(c: Comparison, env) -> float:
    """Residual of one comparison: 0 when satisfied, ``inf`` if undefined or strictly violated at equality."""
    try:
        a = evaluate(c.lhs, env)
        b = evaluate(c.rhs, env)
    except (EvaluationError, ZeroDivisionError, ValueError, OverflowError):
        return math.inf
    diff = a - b
    op = c.op
    if op == "=":
        return float(abs(diff))
    if op in ("<=", "<"):
        if op == "<" and diff == 0:
            return math.inf
        return float(max(diff, 0))
    if op in (">=", ">"):
        if op == ">" and diff == 0:
            return math.inf
        return float(max(-diff, 0))
    return math.inf if diff == 0 else 0.0


def check_solution(net: ConstraintNetwork, s, tol: float | None = None) -> float:
    """Worst violation of ``s`` over all constraints and variable domains."""
    values = s.values if isinstance(s, NumericSolution) else s
    worst = 0.0
    for c in net.constraints:
        missing = [k for k in c.variables() if k not in values]
        if missing:
            return math.inf
        worst = max(worst, violation(c.comparison, values))
    for k in net.variables():
        lo, hi = net.domain(k)
        v = values[k]
        worst = max(worst, float(max(lo - v, v - hi, 0)))
    return worst


def constraint_variables(net: ConstraintNetwork) -> set:
    out = set()
    for c in net.constraints:
        out |= variables(c.comparison.lhs) | variables(c.comparison.rhs)
    return out
