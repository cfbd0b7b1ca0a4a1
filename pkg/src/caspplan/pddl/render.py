"""Canonical PDDL+ text for domain/problem trees (parse . render is the identity)."""

from __future__ import annotations

from fractions import Fraction

from ..expr import Comparison, Const, Expr, UnOp, Var
from . import ast


def number(v: Fraction) -> str:
    """Exact decimal text; non-terminating rationals fall back to ``(/ p q)``."""
    v = Fraction(v)
    if v.denominator == 1:
        return str(v.numerator)
    d = v.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"(/ {v.numerator} {v.denominator})"
    digits = max(twos, fives)
    scaled = abs(v) * 10 ** digits
    whole = str(int(scaled)).rjust(digits + 1, "0")
    text = f"{whole[:-digits]}.{whole[-digits:]}"
    return "-" + text if v < 0 else text


def fluent(key: tuple) -> str:
    return "(" + " ".join(key) + ")"


def expr(e: Expr) -> str:
    if isinstance(e, Const):
        return number(e.value)
    if isinstance(e, Var):
        return e.key if isinstance(e.key, str) else fluent(e.key)
    if isinstance(e, UnOp):
        return f"({'-' if e.op == 'neg' else 'sqrt'} {expr(e.arg)})"
    op = "^" if e.op == "^" else e.op
    return f"({op} {expr(e.left)} {expr(e.right)})"


def comparison(c: Comparison) -> str:
    if c.op == "!=":
        return f"(not (= {expr(c.lhs)} {expr(c.rhs)}))"
    return f"({c.op} {expr(c.lhs)} {expr(c.rhs)})"


def literal(lit) -> str:
    inner = "(" + " ".join((lit.predicate, *lit.args)) + ")"
    return inner if lit.positive else f"(not {inner})"


def condition_item(c) -> str:
    if isinstance(c, ast.NumCondition):
        return comparison(c.comparison)
    return literal(c)


def conj(items, fmt) -> str:
    parts = [fmt(i) for i in items]
    return "(and " + " ".join(parts) + ")" if parts else "(and)"


def effect(e) -> str:
    if isinstance(e, ast.BoolEffect):
        return literal(e)
    if isinstance(e, ast.NumEffect):
        return f"({e.kind} {fluent(e.fluent)} {expr(e.expr)})"
    return f"({e.kind} {fluent(e.fluent)} (* #t {expr(e.rate)}))"


def typed(pairs) -> str:
    return " ".join(f"{n} - {t}" for n, t in pairs)


def _op(decl) -> list[str]:
    lines = [f"  (:{decl.kind} {decl.name}", f"    :parameters ({typed(decl.params)})"]
    if isinstance(decl, ast.DurativeActionDecl):
        dur = [f"({d.op} ?duration {expr(d.expr)})" for d in decl.duration]
        lines.append("    :duration " + (dur[0] if len(dur) == 1 else "(and " + " ".join(dur) + ")"))
        conds = ([f"(at start {condition_item(c)})" for c in decl.at_start]
                 + [f"(over all {condition_item(c)})" for c in decl.over_all]
                 + [f"(at end {condition_item(c)})" for c in decl.at_end])
        effs = ([f"(at start {effect(e)})" for e in decl.start_effects]
                + [f"(at end {effect(e)})" for e in decl.end_effects]
                + [effect(e) for e in decl.continuous_effects])
        lines.append("    :condition (and " + " ".join(conds) + ")")
        lines.append("    :effect (and " + " ".join(effs) + ")")
    else:
        lines.append("    :precondition " + conj(decl.precondition, condition_item))
        lines.append("    :effect " + conj(decl.effects, effect))
    lines[-1] += ")"
    return lines


def render_domain(d: ast.Domain) -> str:
    out = [f"(define (domain {d.name})"]
    if d.requirements:
        out.append("  (:requirements " + " ".join(d.requirements) + ")")
    if d.types:
        out.append("  (:types " + typed(d.types) + ")")
    if d.constants:
        out.append("  (:constants " + typed(d.constants) + ")")
    if d.predicates:
        out.append("  (:predicates " + " ".join(
            f"({p.name}{' ' + typed(p.params) if p.params else ''})" for p in d.predicates) + ")")
    if d.functions:
        out.append("  (:functions " + " ".join(
            f"({f.name}{' ' + typed(f.params) if f.params else ''})" for f in d.functions) + ")")
    for decl in d.operators():
        out.extend(_op(decl))
    out[-1] += ")"
    return "\n".join(out) + "\n"


def render_problem(p: ast.Problem) -> str:
    out = [f"(define (problem {p.name})", f"  (:domain {p.domain_name})"]
    if p.objects:
        out.append("  (:objects " + typed(p.objects) + ")")
    init = [literal(f) for f in p.init_facts]
    init += [f"(= {fluent(k)} {number(v)})" for k, v in p.init_values]
    out.append("  (:init " + " ".join(init) + ")")
    out.append("  (:goal " + conj(p.goal, condition_item) + "))")
    return "\n".join(out) + "\n"
