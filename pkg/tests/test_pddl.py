"""Frontend: parsing, diagnostics, canonical rendering and grounding."""

from fractions import Fraction
from itertools import product

import pytest

from caspplan.bench.domains import FAMILIES, InstanceSpec, generate_instance
from caspplan.pddl import (ParseError, TypeMismatch, UndeclaredSymbol, UnsupportedFeature, ground,
                           parse_domain, parse_problem, render_domain, render_problem)
from caspplan.pddl.ast import ProcessDecl, RateEffect
from caspplan.pddl.ground import MissingInitialValue

GENERATE_PROCESS = """
(define (domain gen)
  (:requirements :fluents :time)
  (:predicates (generator-ran))
  (:functions (fuel-level))
  (:process generate
    :parameters ()
    :precondition (not (generator-ran))
    :effect (decrease (fuel-level) (* #t 1))))
"""


def load(spec):
    d, p = generate_instance(spec)
    dom = parse_domain(d)
    return dom, parse_problem(p, dom)


def test_generate_process_declaration():
    dom = parse_domain(GENERATE_PROCESS)
    assert len(dom.processes) == 1
    proc = dom.processes[0]
    assert isinstance(proc, ProcessDecl) and proc.name == "generate"
    assert len(proc.effects) == 1
    eff = proc.effects[0]
    assert isinstance(eff, RateEffect)
    assert eff.kind == "decrease" and eff.fluent == ("fuel-level",)


def test_empty_domain():
    dom = parse_domain("(define (domain d) )")
    assert dom.name == "d"
    assert dom.operators() == () and dom.predicates == () and dom.functions == ()


def test_car_domain_hand_count():
    dom, _ = load(InstanceSpec("car-linear", 1))
    assert len(dom.processes) == 1
    assert sorted(a.name for a in dom.actions) == ["accelerate", "decelerate", "stop"]
    assert dom.durative_actions == () and dom.events == ()


def test_generator_problem_objects_and_init():
    _, prob = load(InstanceSpec("gen-linear", 1))
    assert dict(prob.objects) == {"tank1": "tank"}
    values = dict(prob.init_values)
    assert values[("fuel-level",)] == Fraction(980)
    assert values[("tank-level", "tank1")] == Fraction(25)


def test_empty_goal():
    dom = parse_domain(GENERATE_PROCESS)
    prob = parse_problem("(define (problem p) (:domain gen) (:init (= (fuel-level) 1)) "
                         "(:goal (and)))", dom)
    assert prob.goal == ()


def test_undeclared_object():
    dom, _ = load(InstanceSpec("gen-linear", 1))
    text = """(define (problem p) (:domain generator-linear) (:objects tank1 - tank)
      (:init (available tank9) (= (fuel-level) 1) (= (capacity) 1) (= (refuel-rate) 1)
             (= (tank-level tank1) 1))
      (:goal (generator-ran)))"""
    with pytest.raises(UndeclaredSymbol):
        ground(dom, parse_problem(text, dom))


def test_parse_error_has_position():
    with pytest.raises(ParseError) as err:
        parse_domain("(define (domain d)\n  (:predicates (p)\n")
    assert err.value.line >= 1


def test_unsupported_construct_named():
    text = """(define (domain d) (:predicates (p) (q))
      (:action a :parameters () :precondition (or (p) (q)) :effect (p)))"""
    with pytest.raises(UnsupportedFeature) as err:
        parse_domain(text)
    assert err.value.construct == "or"


def test_type_mismatch():
    text = """(define (domain d) (:types a b) (:predicates (p ?x - a))
      (:action act :parameters (?x - a) :precondition (p ?x) :effect (not (p ?x))))"""
    dom = parse_domain(text)
    prob = parse_problem("(define (problem q) (:domain d) (:objects o - b) (:init (p o)) "
                         "(:goal (and)))", dom)
    with pytest.raises(TypeMismatch):
        ground(dom, prob)


def test_missing_initial_value():
    dom = parse_domain(GENERATE_PROCESS)
    prob = parse_problem("(define (problem p) (:domain gen) (:init) (:goal (and)))", dom)
    with pytest.raises(MissingInitialValue):
        ground(dom, prob)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_refuel_cardinality(k):
    dom, prob = load(InstanceSpec("gen-linear", k))
    g = ground(dom, prob)
    refuels = [d for d in g.durative_actions if d.name[0] == "refuel"]
    assert [d.name for d in refuels] == [("refuel", f"tank{i}") for i in range(1, k + 1)]


def test_zero_objects_zero_instances():
    text = """(define (domain d) (:types t) (:predicates (p ?x - t) (done))
      (:action a :parameters (?x - t) :precondition (p ?x) :effect (done)))"""
    dom = parse_domain(text)
    prob = parse_problem("(define (problem q) (:domain d) (:init) (:goal (done)))", dom)
    assert ground(dom, prob).actions == ()


def test_ground_matches_typed_tuple_enumeration():
    text = """(define (domain d) (:types t u) (:predicates (p ?x - t ?y - u) (q ?x - t))
      (:action a :parameters (?x - t ?y - u) :precondition (q ?x) :effect (p ?x ?y)))"""
    dom = parse_domain(text)
    prob = parse_problem("""(define (problem q) (:domain d) (:objects t2 t1 - t u1 - u)
      (:init (q t1) (q t2)) (:goal (and)))""", dom)
    g = ground(dom, prob)
    expect = [("a", x, y) for x, y in product(["t1", "t2"], ["u1"])]
    assert [a.name for a in g.actions] == expect


def test_statically_false_precondition_pruned():
    text = """(define (domain d) (:types t) (:predicates (q ?x - t) (done))
      (:action a :parameters (?x - t) :precondition (q ?x) :effect (done)))"""
    dom = parse_domain(text)
    prob = parse_problem("""(define (problem q) (:domain d) (:objects t1 t2 - t)
      (:init (q t1)) (:goal (done)))""", dom)
    assert [a.name for a in ground(dom, prob).actions] == [("a", "t1")]


def test_car_ground_actions():
    dom, prob = load(InstanceSpec("car-linear", 3))
    g = ground(dom, prob)
    assert [a.name for a in g.actions] == [("accelerate",), ("decelerate",), ("stop",)]
    assert [p.name for p in g.processes] == [("moving",)]
    # max-speed is static and folded into the conditions
    assert ("max-speed",) not in g.numeric_fluents
    assert "3" in repr(g.actions[0].precondition.numeric)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("k", [1, 4, 8])
def test_render_round_trip(family, k):
    dom, prob = load(InstanceSpec(family, k))
    dom2 = parse_domain(render_domain(dom))
    assert dom2 == dom
    assert parse_problem(render_problem(prob), dom2) == prob


def test_grounding_deterministic():
    a = ground(*load(InstanceSpec("gen-nonlinear", 3)))
    b = ground(*load(InstanceSpec("gen-nonlinear", 3)))
    assert a == b


def test_ground_symbols_trace_to_declarations():
    dom, prob = load(InstanceSpec("gen-linear", 2))
    g = ground(dom, prob)
    preds = {p.name for p in dom.predicates}
    funcs = {f.name for f in dom.functions}
    ops = {o.name for o in dom.operators()}
    assert all(f[0] in preds for f in g.boolean_fluents)
    assert all(n[0] in funcs for n in g.numeric_fluents)
    for group in (g.actions, g.durative_actions, g.processes, g.events):
        assert all(o.name[0] in ops for o in group)
