"""Compilation of ground instances into rule families and their text rendering."""

import re
import time
from collections import Counter
from itertools import product
from pathlib import Path

import pytest

from caspplan.bench.domains import (DIP_DOMAIN, DIP_PROBLEM, FALLING_BALL_DOMAIN, InstanceSpec,
                                    falling_ball_problem, generate_instance)
from caspplan.encoding import (CaspProgram, emit_text, encode, encode_instance,
                               encode_planning_module)
from caspplan.expr import variables
from caspplan.pddl import ground, parse_domain, parse_problem

GOLDEN = Path(__file__).parent / "golden"

PROCESS_GENERATOR = """
(define (domain gen)
  (:requirements :fluents :time :negative-preconditions)
  (:predicates (generator-ran))
  (:functions (fuel-level))
  (:process generate
    :parameters ()
    :precondition (not (generator-ran))
    :effect (decrease (fuel-level) (* #t 1))))
"""


def instance(domain_text, problem_text):
    dom = parse_domain(domain_text)
    return ground(dom, parse_problem(problem_text, dom))


def family_instance(name, k=1):
    return instance(*generate_instance(InstanceSpec(name, k)))


def squash(text):
    return re.sub(r"\s+", "", text)


def contrib_fragment_present(text, source):
    lines = {squash(l) for l in text.splitlines()}
    v = f"v(contrib(fuel_level,decr,{source}),I)"
    wanted = [f"cspvar({v}):-step(I).",
              f"required({v}>=0):-step(I).",
              f"required({v}==end(I)-start(I)):-step(I),holds(inprogr({source}),I)."]
    return [w for w in wanted if w not in lines]


def test_generate_process_fragment():
    g = instance(PROCESS_GENERATOR, "(define (problem p) (:domain gen) "
                 "(:init (= (fuel-level) 5)) (:goal (and)))")
    assert contrib_fragment_present(emit_text(encode_instance(g, 3)), "generate") == []


def test_shipped_generator_fragment():
    t0 = time.perf_counter()
    text = emit_text(encode_instance(family_instance("gen-linear"), 3))
    assert contrib_fragment_present(text, "generate") == []
    assert time.perf_counter() - t0 < 1.0


def test_car_golden_file():
    text = emit_text(encode_instance(family_instance("car-linear"), 2))
    assert text == (GOLDEN / "car_linear_k1_h2.lp").read_text()


@pytest.mark.parametrize("name", ["gen-linear", "gen-nonlinear", "car-nonlinear"])
def test_emission_deterministic(name):
    a = emit_text(encode(family_instance(name, 2), 3))
    b = emit_text(encode(family_instance(name, 2), 3))
    assert a == b


def test_empty_program_emits_nothing():
    assert emit_text(CaspProgram(2)) == ""


def test_falling_ball_must_choice():
    g = instance(FALLING_BALL_DOMAIN, falling_ball_problem())
    text = emit_text(encode_instance(g, 1))
    lines = {squash(l) for l in text.splitlines()}
    # (held) is static false here and folded away by grounding
    assert ("1{occurs(start(falling),I);is_false(height>0,I)}1:-occstep(I),"
            "notholds(inprogr(falling),I).") in lines
    assert "required(v_final(height,I)<=0):-occstep(I),is_false(height>0,I)." in lines


def test_must_choice_alternatives():
    g = instance(FALLING_BALL_DOMAIN, falling_ball_problem())
    p = encode_instance(g, 2)
    starts = [r for r in p.rules if r.kind == "choice"
              and any(e[0] == "occurs" and e[1] == ("start", ("falling",)) for e in r.elements)]
    assert len(starts) == 1
    r = starts[0]
    numeric_conditions = len(g.processes[0].precondition.numeric)
    assert len(r.elements) == numeric_conditions + 1
    assert (r.lower, r.upper) == (1, 1)


def test_boolean_only_instance():
    dom = parse_domain("""(define (domain d) (:predicates (p))
      (:action a :parameters () :precondition (not (p)) :effect (p)))""")
    g = ground(dom, parse_problem("(define (problem q) (:domain d) (:init) (:goal (p)))", dom))
    p = encode_instance(g, 2)
    numeric = {r.family for r in p.rules if r.kind == "constraint"}
    assert numeric and all(f.startswith(("timeline", "inertia", "propagation")) for f in numeric)


def test_durative_family_completeness():
    g = family_instance("gen-linear", 3)
    p = encode_instance(g, 3)
    for d in g.durative_actions:
        for family in ("durative.stime", "durative.end_trigger", "durative.duration"):
            owned = [r for r in p.families(family) if repr(d.name) in repr(r)]
            assert len(owned) == 1, (d.name, family)


def test_dip_duration_inequality():
    p = encode_instance(instance(DIP_DOMAIN, DIP_PROBLEM), 3)
    text = emit_text(p)
    assert "required(end(K)-stime(pump,J)<=10)" in squash(text)


def test_constraints_use_registered_variables():
    for name in ("gen-linear", "car-nonlinear"):
        p = encode(family_instance(name, 2), 3)
        table = p.variable_table()
        for r in p.ground():
            if r.kind == "constraint":
                assert variables(r.head.lhs) | variables(r.head.rhs) <= table


def test_initial_and_final_values_unique():
    g = family_instance("gen-nonlinear", 2)
    p = encode(g, 3)
    table = Counter(k for k in p.variable_table() if k[0] in ("v_initial", "v_final"))
    for n, i in product(g.numeric_fluents, range(4)):
        assert table[("v_initial", n, i)] == 1 and table[("v_final", n, i)] == 1


def test_planning_module_cardinality():
    dom = parse_domain("""(define (domain d) (:predicates (p))
      (:action a :parameters () :effect (p)) (:action b :parameters () :effect (not (p))))""")
    g = ground(dom, parse_problem("(define (problem q) (:domain d) (:init) (:goal (and)))", dom))
    rules = encode_planning_module(g, 3).ground()
    assert sum(len(r.elements) for r in rules if r.kind == "choice") == 6


def test_planning_module_without_actions():
    dom = parse_domain(PROCESS_GENERATOR)
    g = ground(dom, parse_problem("(define (problem q) (:domain gen) (:init (= (fuel-level) 1)) "
                                  "(:goal (and)))", dom))
    rules = encode_planning_module(g, 2).ground()
    assert sum(len(r.elements) for r in rules if r.kind == "choice") == 0


def test_planning_module_matches_enumeration():
    g = family_instance("car-linear")
    H = 3
    rules = encode_planning_module(g, H).ground()
    got = {e for r in rules if r.kind == "choice" for e in r.elements}
    expect = {("occurs", a.name, i) for a, i in product(g.actions, range(H))}
    expect |= {("occurs", ("start", d.name), i) for d, i in product(g.durative_actions, range(H))}
    assert got == expect


def test_union_composes():
    g = family_instance("car-linear")
    both = encode_instance(g, 2) | encode_planning_module(g, 2)
    assert len(both.rules) == len(encode(g, 2).rules)
    with pytest.raises(ValueError):
        encode_instance(g, 2) | encode_planning_module(g, 3)


def test_negative_horizon_rejected():
    with pytest.raises(ValueError):
        encode_instance(family_instance("car-linear"), -1)
