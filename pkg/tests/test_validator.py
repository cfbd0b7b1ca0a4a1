"""Plan simulation, violation reports, expansion constraints and separation."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caspplan.bench.domains import (DIP_DOMAIN, DIP_PROBLEM, FALLING_BALL_DOMAIN, InstanceSpec,
                                    falling_ball_problem, generate_instance)
from caspplan.driver import PlannerConfig, plan
from caspplan.encoding import encode
from caspplan.expr import Comparison, Var, evaluate, variables
from caspplan.numeric import ConstraintNetwork
from caspplan.pddl import ground, parse_domain, parse_problem
from caspplan.validator import (Happening, MalformedPlan, SeparationFailed, TimedPlan,
                                epsilon_separate, expand, expansion_points, format_plan,
                                interfering_pairs, parse_plan, simulate)

GEN = ("generate",)
REFUEL = ("refuel", "tank1")


def instance(domain_text, problem_text):
    dom = parse_domain(domain_text)
    return ground(dom, parse_problem(problem_text, dom))


@pytest.fixture(scope="module")
def gen():
    return instance(*generate_instance(InstanceSpec("gen-linear", 1)))


@pytest.fixture(scope="module")
def dip():
    return instance(DIP_DOMAIN, DIP_PROBLEM)


def dip_plan(pump):
    # provenance steps as the driver produces them at horizon 4
    return TimedPlan((Happening(0, ("pump",), pump, 0, 1), Happening(pump, ("burn",), 4, 2, 3)))


def test_generator_plan_valid(gen):
    plan = TimedPlan((Happening(0, GEN, 1000), Happening(0, REFUEL, 12.5)))
    assert simulate(gen, plan).valid


def test_generator_runs_dry_without_refuel(gen):
    r = simulate(gen, TimedPlan((Happening(0, GEN, 1000),)))
    assert not r.valid
    assert r.kind == "over-all" and r.owner == GEN
    assert r.t_star == pytest.approx(980, abs=0.1)
    assert r.t_worst == pytest.approx(1000, abs=0.1)
    assert r.step is not None and r.condition is not None


def test_empty_plan_misses_goal(gen):
    r = simulate(gen, TimedPlan())
    assert not r.valid and r.kind == "goal"


def test_wrong_duration_rejected(gen):
    r = simulate(gen, TimedPlan((Happening(0, GEN, 999), Happening(0, REFUEL, 12.5))))
    assert not r.valid and r.kind == "duration"


def test_unknown_action_is_malformed(gen):
    with pytest.raises(MalformedPlan):
        simulate(gen, TimedPlan((Happening(0, ("fly",), 1),)))


def test_midstate_dip_detected(dip):
    r = simulate(dip, dip_plan(1))
    assert not r.valid and r.kind == "over-all" and r.owner == ("burn",)
    # fuel(tau) = 1 - 2 tau + tau^2 / 2 first reaches 0 at tau = 2 - sqrt 2
    assert abs(r.t_star - (1 + 2 - math.sqrt(2))) <= 0.1
    assert r.t_worst == pytest.approx(3, abs=1e-3)
    assert r.step == 3


def test_dip_boundaries_alone_pass(dip):
    # the same plan with pump long enough keeps fuel positive throughout
    assert simulate(dip, dip_plan(3)).valid


def test_report_json_fields(dip):
    doc = simulate(dip, dip_plan(1)).to_json()
    assert doc["verdict"] == "invalid"
    for key in ("condition", "t_star", "step", "trace"):
        assert doc[key] is not None


def test_empty_plan_ends_at_time_zero():
    g = instance(FALLING_BALL_DOMAIN, falling_ball_problem())
    r = simulate(g, TimedPlan())
    assert r.valid
    assert r.trace == [(0.0, {"(height)": 5.0, "(velocity)": 0.0})]


@pytest.mark.parametrize("gran", [0.1, 0.05, 0.025])
def test_verdict_stable_under_refinement(gen, gran):
    ok = TimedPlan((Happening(0, GEN, 1000), Happening(0, REFUEL, 12.5)))
    bad = TimedPlan((Happening(0, GEN, 1000), Happening(0, REFUEL, 2)))
    assert simulate(gen, ok, gran).valid
    assert not simulate(gen, bad, gran).valid


# -- plan text ------------------------------------------------------------------

def test_plan_text_round_trip():
    plan = TimedPlan((Happening(0, GEN, 1000), Happening(0.001, REFUEL, 12.5)))
    text = format_plan(plan)
    assert text == "0.000: (generate) [1000.000]\n0.001: (refuel tank1) [12.500]\n"
    back = parse_plan(text)
    assert [(h.time, h.name, h.duration) for h in back.happenings] == \
        [(0.0, GEN, 1000.0), (0.001, REFUEL, 12.5)]


def test_parse_ignores_comments():
    plan = parse_plan("; found by caspplan\n1.5: (stop)\n")
    assert plan.happenings[0].name == ("stop",) and plan.happenings[0].duration == 0


@pytest.mark.parametrize("text", ["0.0 (stop)", "x: (stop)", "1: stop", "1: (stop) [abc]",
                                  "-1: (stop)"])
def test_parse_rejects_garbage(text):
    with pytest.raises(MalformedPlan):
        parse_plan(text)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 10**6), st.sampled_from([GEN, REFUEL, ("stop",)]),
                          st.integers(0, 10**5)), max_size=6))
def test_format_parse_property(items):
    plan = TimedPlan(tuple(Happening(t / 1000, n, d / 1000) for t, n, d in items))
    again = parse_plan(format_plan(plan))
    assert format_plan(again) == format_plan(plan)


# -- expansion ------------------------------------------------------------------

def test_expand_adds_values_and_invariant(dip):
    r = simulate(dip, dip_plan(1))
    net = ConstraintNetwork()
    net.add(Comparison(">=", Var(("tend", 0)), Var(("tstart", 0))), "timeline")
    before = list(net.constraints)
    out = expand(r, net, encode(dip, 4))
    assert out.constraints[:1] == before
    added = out.constraints[1:]
    points = expansion_points(r)
    assert len(points) == 2
    fresh = {c.comparison.lhs.key for c in added if c.family == "expand.value"}
    # fuel is in the condition, flow drives its rate
    assert {(k[1], k[2]) for k in fresh} == {(("fuel",), 3), (("flow",), 3)}
    assert len(fresh) == 2 * len(points)
    invariants = [c for c in added if c.family == "expand.invariant"]
    assert len(invariants) == len(points)
    for c in invariants:
        assert all(k[0] == "v_at" for k in variables(c.comparison.lhs))
    assert out.meta["expansions"] == 1


def test_expand_needs_invalid_report(gen):
    r = simulate(gen, TimedPlan((Happening(0, GEN, 1000), Happening(0, REFUEL, 12.5))))
    with pytest.raises(ValueError):
        expand(r, ConstraintNetwork(), encode(gen, 3))


def test_expansion_offsets_exact(dip):
    r = simulate(dip, dip_plan(1))
    pts = expansion_points(r)
    assert all(isinstance(tau, Fraction) for tau in pts)
    assert float(pts[0]) == pytest.approx(2 - math.sqrt(2), abs=1e-6)


# -- separation -----------------------------------------------------------------

def test_simultaneous_interference_separated(gen):
    plan = TimedPlan((Happening(0, GEN, 1000), Happening(0, REFUEL, 12.5)))
    assert interfering_pairs(plan, gen)
    out = epsilon_separate(plan, 0.001, gen)
    times = {h.name: h.time for h in out.happenings}
    assert times[REFUEL] - times[GEN] >= 0.001 - 1e-12
    assert all(abs(a - b) >= 0.001 - 1e-12 for a, b in interfering_pairs(out, gen))
    assert simulate(gen, out).valid


def test_dip_handover_separated(dip):
    out = epsilon_separate(TimedPlan((Happening(0, ("pump",), 3, 0, 1),
                                      Happening(3, ("burn",), 4, 2, 3))), 0.001, dip)
    assert [h.time for h in out.sorted()] == pytest.approx([0, 3.001])
    assert simulate(dip, out).valid


SWITCHES = """(define (domain switches) (:requirements :negative-preconditions)
  (:predicates (p) (q) (r))
  (:action set-p :parameters () :precondition (not (p)) :effect (p))
  (:action set-q :parameters () :precondition (not (q)) :effect (q))
  (:action set-r :parameters () :precondition (p) :effect (r)))"""


def test_independent_simultaneity_preserved():
    g = instance(SWITCHES, "(define (problem s) (:domain switches) (:init) (:goal (and (r) (q))))")
    plan = TimedPlan((Happening(0, ("set-p",)), Happening(0, ("set-q",)),
                      Happening(0, ("set-r",), 0, 1)))
    out = epsilon_separate(plan, 0.001, g)
    t = {h.name: h.time for h in out.happenings}
    assert t[("set-p",)] == t[("set-q",)] == 0
    assert t[("set-r",)] == pytest.approx(0.001)
    assert simulate(g, out).valid


def test_separation_failure_reported(gen):
    # an interfering action shorter than eps cannot be moved past its partner
    plan = TimedPlan((Happening(0, GEN, 1000), Happening(0, REFUEL, 0.0005)))
    with pytest.raises(SeparationFailed):
        epsilon_separate(plan, 0.001, gen)


def test_generator_expansion_instantiates_rate(gen):
    r = simulate(gen, TimedPlan((Happening(0, GEN, 1000),)))
    out = expand(r, ConstraintNetwork(), encode(gen, 3))
    points = expansion_points(r)
    # one fresh value and one invariant per point: fuel has a constant rate
    assert len(out) == 2 * len(points)
    for c, tau in zip(out.constraints[0::2], points):
        key = c.comparison.lhs.key
        assert key == ("v_at", ("fuel-level",), r.step, tau)
        env = {("v_initial", ("fuel-level",), r.step): Fraction(980)}
        assert evaluate(c.comparison.rhs, env) == 980 - tau


# -- refinement monotonicity on benchmark plans ---------------------------------

GRANULARITIES = (0.1, 0.05, 0.025, 0.0125)


def _benchmark_plans():
    out = []
    for name, h in (("car-linear", 3), ("car-nonlinear", 4), ("gen-linear", 3),
                    ("gen-nonlinear", 3)):
        g = instance(*generate_instance(InstanceSpec(name, 1)))
        res = plan(g, PlannerConfig(fixed_step=h, timeout=120))
        assert res.found
        out.append((g, res.plan))
        # a perturbed copy: every duration and time scaled, usually invalid
        skew = TimedPlan(tuple(Happening(x.time * 0.9, x.name, x.duration * 0.9)
                               for x in res.plan.happenings))
        out.append((g, skew))
    return out


def test_halving_granularity_never_validates_invalid_plan():
    for g, p in _benchmark_plans():
        verdicts = [simulate(g, p, gran).valid for gran in GRANULARITIES]
        for coarse, fine in zip(verdicts, verdicts[1:]):
            assert coarse or not fine, (g.problem_name, verdicts)
