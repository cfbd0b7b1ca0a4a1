"""
Rule schemas, their grounding over a step horizon, and solver-style text.

Atoms and terms are plain tuples ``(functor, *args)``; the last argument of an
atom is always its time step.  Inside schemas step positions hold
:class:`StepVar` placeholders which :func:`ground_program` replaces by integers.
Numeric variables are :class:`~caspplan.expr.Var` nodes whose keys follow the
same convention, e.g. ``("v_final", ("fuel-level",), 3)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from ..expr import Comparison, map_keys, render_infix

RULE_KINDS = ("fact", "rule", "denial", "choice", "constraint")


@dataclass(frozen=True)
class StepVar:
    """A step placeholder ``var + offset`` inside a schema."""

    var: str
    offset: int = 0

    def __add__(self, k: int) -> "StepVar":
        return StepVar(self.var, self.offset + k)


@dataclass(frozen=True)
class Rule:
    """
    One rule schema.

    ``domain`` lists ``(var, range)`` pairs with range ``"state"`` (0..H) or
    ``"occ"`` (0..H-1).  ``elem_domain`` ranges over variables local to the
    choice elements; ``guards`` are ``(a, b)`` pairs requiring ``a < b``.
    """

    kind: str
    family: str
    head: object = None
    pos: tuple = ()
    neg: tuple = ()
    elements: tuple = ()
    lower: int | None = None
    upper: int | None = None
    domain: tuple = ()
    elem_domain: tuple = ()
    guards: tuple = ()

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule kind {self.kind}")
        if self.kind == "choice" and self.lower is not None and self.upper is not None:
            if not 0 <= self.lower <= self.upper:
                raise ValueError("choice bounds must satisfy 0 <= lower <= upper")


@dataclass(frozen=True)
class GroundRule:
    kind: str
    family: str
    head: object
    pos: tuple
    neg: tuple
    elements: tuple = ()
    lower: int | None = None
    upper: int | None = None

    @property
    def body(self) -> tuple:
        return self.pos + self.neg


@dataclass
class CaspProgram:
    """Rule schemas plus the tables the search, solver and validator consult."""

    horizon: int
    rules: list = field(default_factory=list)
    # numeric variable families: (family name, key template, range)
    var_families: list = field(default_factory=list)
    instance: object = None
    # fluent -> [(tag, source operator name, rate expression over fluent keys)]
    continuous: dict = field(default_factory=dict)
    # occurrence term -> ("action" | "start" | "end" | "process-start" | "process-end"
    #                     | "event", operator name)
    happenings: dict = field(default_factory=dict)
    _ground: list | None = field(default=None, repr=False)

    def add(self, rule: Rule) -> None:
        self.rules.append(rule)
        self._ground = None

    def register(self, family: str, template: tuple, rng: str = "state") -> None:
        self.var_families.append((family, template, rng))

    def union(self, other: "CaspProgram") -> "CaspProgram":
        if other.horizon != self.horizon:
            raise ValueError("programs built for different horizons")
        out = CaspProgram(self.horizon, self.rules + other.rules,
                          self.var_families + [f for f in other.var_families
                                               if f not in self.var_families],
                          self.instance or other.instance,
                          {**other.continuous, **self.continuous},
                          {**other.happenings, **self.happenings})
        return out

    def __or__(self, other):
        return self.union(other)

    def ground(self) -> list:
        if self._ground is None:
            self._ground = ground_program(self.rules, self.horizon)
        return self._ground

    def families(self, name: str) -> list:
        return [r for r in self.rules if r.family == name]

    def variable_table(self) -> set:
        out = set()
        for _, template, rng in self.var_families:
            for i in _range(rng, self.horizon):
                out.add(_subst(template, {v: i for v in _step_vars(template)}))
        return out


# -- grounding -------------------------------------------------------------------

def _range(kind: str, horizon: int) -> range:
    if kind == "state":
        return range(horizon + 1)
    if kind == "occ":
        return range(horizon)
    raise ValueError(kind)


def _step_vars(t) -> set:
    if isinstance(t, StepVar):
        return {t.var}
    if isinstance(t, tuple):
        out = set()
        for a in t:
            out |= _step_vars(a)
        return out
    if isinstance(t, Comparison):
        out = set()
        for k in t.variables():
            out |= _step_vars(k)
        return out
    return set()


def _subst(t, env: dict):
    if isinstance(t, StepVar):
        return env[t.var] + t.offset
    if isinstance(t, tuple):
        return tuple(_subst(a, env) for a in t)
    if isinstance(t, Comparison):
        return t.map(lambda e: map_keys(e, lambda k: _subst(k, env)))
    return t


def _within(atom, horizon: int) -> bool:
    """Atoms whose step falls outside 0..H are dropped from grounded rules."""
    return 0 <= atom[-1] <= horizon


def ground_program(rules, horizon: int) -> list:
    out = []
    for r in rules:
        names = [v for v, _ in r.domain]
        ranges = [_range(k, horizon) for _, k in r.domain]
        for values in product(*ranges):
            env = dict(zip(names, values))
            if any(a in env and b in env and not env[a] < env[b] for a, b in r.guards):
                continue
            head = _subst(r.head, env) if r.head is not None else None
            pos = tuple(_subst(a, env) for a in r.pos)
            neg = tuple(_subst(a, env) for a in r.neg)
            if r.kind == "choice":
                elems = []
                enames = [v for v, _ in r.elem_domain]
                eranges = [_range(k, horizon) for _, k in r.elem_domain]
                for evalues in product(*eranges):
                    eenv = {**env, **dict(zip(enames, evalues))}
                    if any(not eenv[a] < eenv[b] for a, b in r.guards):
                        continue
                    elems.extend(_subst(e, eenv) for e in r.elements)
                out.append(GroundRule("choice", r.family, None, pos, neg, tuple(elems),
                                      r.lower, r.upper))
                continue
            if isinstance(head, tuple) and not _within(head, horizon):
                continue
            out.append(GroundRule(r.kind, r.family, head, pos, neg))
    return out


# -- text ------------------------------------------------------------------------

def term_text(t) -> str:
    if isinstance(t, StepVar):
        if t.offset > 0:
            return f"{t.var}+{t.offset}"
        if t.offset < 0:
            return f"{t.var}-{-t.offset}"
        return t.var
    if isinstance(t, bool):
        return str(t).lower()
    if isinstance(t, int):
        return str(t)
    if isinstance(t, str):
        return t.replace("-", "_").replace("?", "")
    if isinstance(t, Comparison):
        return comparison_text(t, term_text)
    if isinstance(t, tuple):
        if not t:
            return "()"
        f, *args = t
        if not args:
            return term_text(f)
        return f"{term_text(f)}({','.join(term_text(a) for a in args)})"
    return str(t)


def numvar_text(key) -> str:
    if isinstance(key, tuple) and key and key[0] in ("tstart", "tend"):
        return ("start" if key[0] == "tstart" else "end") + f"({term_text(key[1])})"
    return term_text(key)


def comparison_text(c: Comparison, var=numvar_text) -> str:
    op = "==" if c.op == "=" else c.op
    return f"{render_infix(c.lhs, var)}{op}{render_infix(c.rhs, var)}"


def _body(r: Rule) -> list[str]:
    dom = [f"{'step' if k == 'state' else 'occstep'}({v})" for v, k in r.domain]
    guards = [f"{a}<{b}" for a, b in r.guards if all(x in dict(r.domain) for x in (a, b))]
    lits = [term_text(a) for a in r.pos] + [f"not {term_text(a)}" for a in r.neg]
    return dom + guards + lits


def rule_text(r: Rule) -> str:
    body = _body(r)
    tail = f" :- {', '.join(body)}." if body else "."
    if r.kind in ("fact", "rule"):
        return term_text(r.head) + tail
    if r.kind == "denial":
        return f":- {', '.join(body)}."
    if r.kind == "constraint":
        return f"required({comparison_text(r.head)})" + tail
    elems = "; ".join(term_text(e) for e in r.elements)
    if r.elem_domain:
        local = [f"{'step' if k == 'state' else 'occstep'}({v})" for v, k in r.elem_domain]
        local += [f"{a}<{b}" for a, b in r.guards if a in dict(r.elem_domain)
                  or b in dict(r.elem_domain)]
        elems += ": " + ", ".join(local)
    lo = "" if r.lower is None else str(r.lower)
    hi = "" if r.upper is None else str(r.upper)
    return f"{lo}{{{elems}}}{hi}" + tail


def emit_text(p: CaspProgram) -> str:
    """Deterministic rendering, one rule per line; numeric heads use ``required(...)``."""
    if not p.rules:
        return ""
    lines = [f"step(0..{p.horizon})."]
    if p.horizon > 0:
        lines.append(f"occstep(0..{p.horizon - 1}).")
    for _, template, rng in p.var_families:
        vs = sorted(_step_vars(template))
        dom = ", ".join(f"{'step' if rng == 'state' else 'occstep'}({v})" for v in vs)
        lines.append(f"cspvar({numvar_text(template)})" + (f" :- {dom}." if dom else "."))
    lines.extend(rule_text(r) for r in p.rules)
    return "\n".join(lines) + "\n"

