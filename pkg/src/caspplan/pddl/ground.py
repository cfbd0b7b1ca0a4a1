"""
Grounding of a parsed domain/problem pair into a :class:`GroundInstance`.

Parameterised operators are instantiated over every type-compatible object
tuple, in lexicographic order of (operator name, object tuple).  Predicates and
functions that no operator changes are static: they are folded into the ground
conditions and expressions and do not become fluents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from ..expr import Comparison, Const, Expr, compare, evaluate, fold_constants, map_keys, \
    substitute, variables
from . import ast
from .errors import PddlError, TypeMismatch, UndeclaredSymbol


class MissingInitialValue(PddlError):
    pass


@dataclass(frozen=True)
class GroundCondition:
    literals: tuple = ()  # ((atom, positive), ...)
    numeric: tuple = ()  # Comparison over ground fluent keys

    def __bool__(self):
        return bool(self.literals or self.numeric)

    def fluents(self) -> set:
        out = {a for a, _ in self.literals}
        for c in self.numeric:
            out |= c.variables()
        return out


@dataclass(frozen=True)
class GroundEffects:
    add: tuple = ()
    delete: tuple = ()
    numeric: tuple = ()  # ((kind, fluent, expr), ...)

    def touched(self) -> set:
        return set(self.add) | set(self.delete) | {f for _, f, _ in self.numeric}

    def __bool__(self):
        return bool(self.add or self.delete or self.numeric)


@dataclass(frozen=True)
class GroundAction:
    name: tuple
    precondition: GroundCondition = GroundCondition()
    effects: GroundEffects = GroundEffects()


@dataclass(frozen=True)
class GroundDurativeAction:
    name: tuple
    duration: tuple = ()  # ((op, expr), ...) with expr over fluents at start
    at_start: GroundCondition = GroundCondition()
    over_all: GroundCondition = GroundCondition()
    at_end: GroundCondition = GroundCondition()
    start_effects: GroundEffects = GroundEffects()
    end_effects: GroundEffects = GroundEffects()
    rates: tuple = ()  # ((kind, fluent, rate_expr), ...)


@dataclass(frozen=True)
class GroundProcess:
    name: tuple
    precondition: GroundCondition = GroundCondition()
    rates: tuple = ()


@dataclass(frozen=True)
class GroundEvent:
    name: tuple
    precondition: GroundCondition = GroundCondition()
    effects: GroundEffects = GroundEffects()


@dataclass
class GroundInstance:
    domain_name: str
    problem_name: str
    boolean_fluents: tuple
    numeric_fluents: tuple
    actions: tuple
    durative_actions: tuple
    processes: tuple
    events: tuple
    init_true: frozenset
    init_values: dict
    goal: GroundCondition
    statics: dict = field(default_factory=dict)

    def operator(self, name: tuple):
        for group in (self.actions, self.durative_actions, self.processes, self.events):
            for op in group:
                if op.name == name:
                    return op
        return None


def name_text(name: tuple) -> str:
    return "(" + " ".join(name) + ")"


class _Grounder:
    def __init__(self, domain: ast.Domain, problem: ast.Problem):
        self.domain = domain
        self.problem = problem
        self.parents = domain.type_parents()
        objects = dict(domain.constants)
        objects.update(problem.objects)
        self.objects = objects
        self.by_type: dict[str, list[str]] = {}
        for obj in sorted(objects):
            for t in self.ancestors(objects[obj]):
                self.by_type.setdefault(t, []).append(obj)
        changed_preds, changed_funcs = set(), set()
        for op in domain.operators():
            for eff in _all_effects(op):
                if isinstance(eff, ast.BoolEffect):
                    changed_preds.add(eff.predicate)
                else:
                    changed_funcs.add(eff.fluent[0])
        self.static_preds = {p.name for p in domain.predicates} - changed_preds
        self.static_funcs = {f.name for f in domain.functions} - changed_funcs
        self.init_true = set()
        for lit in problem.init_facts:
            self.check_types(lit.predicate, lit.args, domain.predicate(lit.predicate), lit.span)
            self.init_true.add(lit.atom)
        self.values = {}
        for key, v in problem.init_values:
            self.check_types(key[0], key[1:], domain.function(key[0]), (0, 0))
            self.values[key] = v

    def ancestors(self, t: str) -> list[str]:
        out = [t]
        seen = {t}
        while t in self.parents and self.parents[t] not in seen:
            t = self.parents[t]
            seen.add(t)
            out.append(t)
        if "object" not in seen:
            out.append("object")
        return out

    def check_types(self, sym, args, decl, span):
        for arg, (_, t) in zip(args, decl.params):
            if arg not in self.objects:
                raise UndeclaredSymbol(arg, "object", *span)
            if t not in self.ancestors(self.objects[arg]):
                raise TypeMismatch(f"{arg} is not of type {t} in ({sym} {' '.join(args)})", *span)

    # -- substitution ----------------------------------------------------------

    def fold_expr(self, e: Expr, binding: dict) -> Expr:
        def key(k):
            if isinstance(k, tuple):
                return (k[0], *(binding.get(a, a) for a in k[1:]))
            return k
        e = map_keys(e, key)
        statics = {}
        for k in variables(e):
            if isinstance(k, tuple) and k[0] in self.static_funcs:
                if k not in self.values:
                    raise MissingInitialValue(f"static function {name_text(k)} has no initial value")
                statics[k] = Const(self.values[k])
        return fold_constants(substitute(e, statics)) if statics else fold_constants(e)

    def condition(self, items, binding) -> GroundCondition | None:
        """None when a static part is false."""
        lits, nums = [], []
        for c in items:
            if isinstance(c, ast.Literal):
                atom = (c.predicate, *(binding.get(a, a) for a in c.args))
                if c.predicate in self.static_preds:
                    if (atom in self.init_true) != c.positive:
                        return None
                    continue
                if (atom, c.positive) not in lits:
                    lits.append((atom, c.positive))
            else:
                comp = c.comparison.map(lambda e: self.fold_expr(e, binding))
                if not comp.variables():
                    if not compare(comp.op, evaluate(comp.lhs, {}), evaluate(comp.rhs, {})):
                        return None
                    continue
                nums.append(comp)
        return GroundCondition(tuple(lits), tuple(nums))

    def effects(self, items, binding) -> GroundEffects:
        add, dele, num = [], [], []
        for e in items:
            if isinstance(e, ast.BoolEffect):
                atom = (e.predicate, *(binding.get(a, a) for a in e.args))
                (add if e.positive else dele).append(atom)
            elif isinstance(e, ast.NumEffect):
                fl = (e.fluent[0], *(binding.get(a, a) for a in e.fluent[1:]))
                num.append((e.kind, fl, self.fold_expr(e.expr, binding)))
        return GroundEffects(tuple(add), tuple(dele), tuple(num))

    def rates(self, items, binding) -> tuple:
        out = []
        for e in items:
            fl = (e.fluent[0], *(binding.get(a, a) for a in e.fluent[1:]))
            out.append((e.kind, fl, self.fold_expr(e.rate, binding)))
        return tuple(out)

    def bindings(self, params):
        pools = [self.by_type.get(t, []) for _, t in params]
        for combo in product(*pools):
            yield tuple(combo), {v: o for (v, _), o in zip(params, combo)}

    # -- operators -------------------------------------------------------------

    def run(self) -> GroundInstance:
        d = self.domain
        actions, duratives, processes, events = [], [], [], []
        for decl in sorted(d.actions, key=lambda x: x.name):
            for objs, b in self.bindings(decl.params):
                pre = self.condition(decl.precondition, b)
                if pre is not None:
                    actions.append(GroundAction((decl.name, *objs), pre, self.effects(decl.effects, b)))
        for decl in sorted(d.durative_actions, key=lambda x: x.name):
            for objs, b in self.bindings(decl.params):
                conds = [self.condition(c, b) for c in (decl.at_start, decl.over_all, decl.at_end)]
                if any(c is None for c in conds):
                    continue
                dur = tuple((dc.op, self.fold_expr(dc.expr, b)) for dc in decl.duration)
                duratives.append(GroundDurativeAction(
                    (decl.name, *objs), dur, *conds,
                    self.effects(decl.start_effects, b), self.effects(decl.end_effects, b),
                    self.rates(decl.continuous_effects, b)))
        for decl in sorted(d.processes, key=lambda x: x.name):
            for objs, b in self.bindings(decl.params):
                pre = self.condition(decl.precondition, b)
                if pre is not None:
                    processes.append(GroundProcess((decl.name, *objs), pre, self.rates(decl.effects, b)))
        for decl in sorted(d.events, key=lambda x: x.name):
            for objs, b in self.bindings(decl.params):
                pre = self.condition(decl.precondition, b)
                if pre is not None:
                    events.append(GroundEvent((decl.name, *objs), pre, self.effects(decl.effects, b)))

        bools, nums = [], []
        for p in sorted(d.predicates, key=lambda x: x.name):
            if p.name in self.static_preds:
                continue
            for objs, _ in self.bindings(p.params):
                bools.append((p.name, *objs))
        for f in sorted(d.functions, key=lambda x: x.name):
            if f.name in self.static_funcs:
                continue
            for objs, _ in self.bindings(f.params):
                key = (f.name, *objs)
                if key not in self.values:
                    raise MissingInitialValue(f"numeric fluent {name_text(key)} has no initial value")
                nums.append(key)
        goal = self.condition(self.problem.goal, {})
        if goal is None:
            # statically unsatisfiable goal: keep an impossible literal-free marker
            goal = GroundCondition((), (Comparison("<", Const(Fraction(1)), Const(Fraction(0))),))
        init_true = frozenset(a for a in self.init_true if a[0] not in self.static_preds)
        statics = {k: v for k, v in self.values.items() if k[0] in self.static_funcs}
        return GroundInstance(
            d.name, self.problem.name, tuple(bools), tuple(nums), tuple(actions),
            tuple(duratives), tuple(processes), tuple(events), init_true,
            {k: self.values[k] for k in nums}, goal, statics)


def _all_effects(op):
    if isinstance(op, ast.DurativeActionDecl):
        return op.start_effects + op.end_effects + op.continuous_effects
    return op.effects


def ground(domain: ast.Domain, problem: ast.Problem) -> GroundInstance:
    return _Grounder(domain, problem).run()
