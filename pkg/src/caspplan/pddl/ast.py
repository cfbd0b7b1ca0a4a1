"""
Abstract syntax for the supported PDDL+ subset.

Source spans are kept on every declaration but excluded from equality, so two
trees are equal when they are structurally identical.  Numeric expressions are
:mod:`caspplan.expr` trees whose variables are keyed by

* fluent terms ``(name, arg1, ...)`` (arguments may be ``?vars`` before grounding),
* the strings ``"?duration"`` and ``"#t"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from ..expr import Comparison, Expr

DURATION = "?duration"
ELAPSED = "#t"

Span = tuple  # (line, col)


def _span():
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Literal:
    predicate: str
    args: tuple
    positive: bool = True
    span: Span = _span()

    @property
    def atom(self) -> tuple:
        return (self.predicate, *self.args)


@dataclass(frozen=True)
class NumCondition:
    comparison: Comparison
    span: Span = _span()


Condition = Union[Literal, NumCondition]


@dataclass(frozen=True)
class BoolEffect:
    predicate: str
    args: tuple
    positive: bool = True
    span: Span = _span()

    @property
    def atom(self) -> tuple:
        return (self.predicate, *self.args)


@dataclass(frozen=True)
class NumEffect:
    """Discrete numeric change: ``assign``, ``increase`` or ``decrease``."""

    kind: str
    fluent: tuple
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class RateEffect:
    """Continuous change ``(increase f (* #t rate))``."""

    kind: str  # increase | decrease
    fluent: tuple
    rate: Expr
    span: Span = _span()


Effect = Union[BoolEffect, NumEffect, RateEffect]


@dataclass(frozen=True)
class DurationConstraint:
    op: str  # = <= >=
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    params: tuple  # ((var, type), ...)
    span: Span = _span()


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: tuple
    span: Span = _span()


@dataclass(frozen=True)
class ActionDecl:
    name: str
    params: tuple
    precondition: tuple = ()
    effects: tuple = ()
    span: Span = _span()
    kind = "action"


@dataclass(frozen=True)
class DurativeActionDecl:
    name: str
    params: tuple
    duration: tuple = ()
    at_start: tuple = ()
    over_all: tuple = ()
    at_end: tuple = ()
    start_effects: tuple = ()
    end_effects: tuple = ()
    continuous_effects: tuple = ()
    span: Span = _span()
    kind = "durative-action"


@dataclass(frozen=True)
class ProcessDecl:
    name: str
    params: tuple
    precondition: tuple = ()
    effects: tuple = ()
    span: Span = _span()
    kind = "process"


@dataclass(frozen=True)
class EventDecl:
    name: str
    params: tuple
    precondition: tuple = ()
    effects: tuple = ()
    span: Span = _span()
    kind = "event"


@dataclass(frozen=True)
class Domain:
    name: str
    requirements: tuple = ()
    types: tuple = ()  # ((type, parent), ...)
    constants: tuple = ()  # ((name, type), ...)
    predicates: tuple = ()
    functions: tuple = ()
    actions: tuple = ()
    durative_actions: tuple = ()
    processes: tuple = ()
    events: tuple = ()
    span: Span = _span()

    def type_parents(self) -> dict:
        return dict(self.types)

    def predicate(self, name: str) -> PredicateDecl | None:
        return next((p for p in self.predicates if p.name == name), None)

    def function(self, name: str) -> FunctionDecl | None:
        return next((f for f in self.functions if f.name == name), None)

    def operators(self) -> tuple:
        return self.actions + self.durative_actions + self.processes + self.events


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple = ()  # ((name, type), ...)
    init_facts: tuple = ()  # Literal
    init_values: tuple = ()  # ((fluent term), Fraction)
    goal: tuple = ()
    span: Span = _span()


def fluent_key(name: str, args=()) -> tuple:
    return (name, *args)


def init_value_map(problem: Problem) -> dict[tuple, Fraction]:
    return dict(problem.init_values)
