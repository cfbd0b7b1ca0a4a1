"""Candidate enumeration against the brute-force stable-model oracle."""

import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caspplan.bench.domains import FALLING_BALL_DOMAIN, InstanceSpec, falling_ball_problem, \
    generate_instance
from caspplan.encoding import encode
from caspplan.numeric import solve
from caspplan.pddl import ground, parse_domain, parse_problem
from caspplan.search import (Search, SearchConfig, SearchTimeout, induced_constraints,
                             next_candidate)
from micro import random_instance
from oracles import stable_models


def ball(height="5", held=False):
    dom = parse_domain(FALLING_BALL_DOMAIN)
    return ground(dom, parse_problem(falling_ball_problem(height, held), dom))


def test_falling_ball_two_outcomes():
    p = encode(ball(), 1)
    traces = list(Search(p, SearchConfig(1)))
    assert len(traces) == 2
    kinds = sorted(t.must_choices(0)[0][0] if t.must_choices(0) else "start" for t in traces)
    assert kinds == ["is_false", "start"]


def test_falling_ball_height_five_forces_start():
    p = encode(ball("5"), 1)
    survivors = []
    for t in Search(p, SearchConfig(1)):
        if solve(induced_constraints(t, p)).sat:
            survivors.append(t)
    assert len(survivors) == 1
    assert ("start", ("falling",)) in survivors[0].occurrences(0)


def test_held_ball_has_one_trace():
    p = encode(ball(held=True), 1)
    traces = list(Search(p, SearchConfig(1)))
    assert len(traces) == 1 and traces[0].occurrences(0) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 2))
def test_enumeration_equals_stable_models(seed, horizon):
    p = encode(random_instance(random.Random(seed)), horizon)
    try:
        expect = stable_models(p.ground())
    except ValueError:
        return  # too many atoms for brute force
    got = [t.atoms for t in Search(p, SearchConfig(horizon))]
    assert len(got) == len(set(got))
    assert set(got) == expect


def test_enumeration_order_deterministic():
    g = ground(*_gen(2))
    a = [t.atoms for t in Search(encode(g, 3), SearchConfig(3, candidate_limit=30))]
    b = [t.atoms for t in Search(encode(g, 3), SearchConfig(3, candidate_limit=30))]
    assert a == b and len(a) == 30


def _gen(k):
    d, p = generate_instance(InstanceSpec("gen-linear", k))
    dom = parse_domain(d)
    return dom, parse_problem(p, dom)


def test_candidate_limit_and_cursor():
    p = encode(ball(), 1)
    first, cursor = next_candidate(p, SearchConfig(1, candidate_limit=1))
    assert first is not None
    assert next_candidate(p, SearchConfig(1, candidate_limit=1), cursor) is None


def test_nogood_prunes_matching_traces():
    p = encode(ball(), 1)
    s = Search(p, SearchConfig(1))
    start = ("occurs", ("start", ("falling",)), 0)
    s.add_nogood({(start, True)})
    traces = list(s)
    assert len(traces) == 1 and start not in traces[0].atoms


def test_forced_atoms():
    p = encode(ball(), 1)
    start = ("occurs", ("start", ("falling",)), 0)
    traces = list(Search(p, SearchConfig(1, forced=(start,))))
    assert len(traces) == 1 and start in traces[0].atoms


def test_deadline_raises():
    g = ground(*_gen(3))
    s = Search(encode(g, 4), SearchConfig(4, deadline=time.monotonic() - 1))
    with pytest.raises(SearchTimeout):
        list(s)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(-1)
    with pytest.raises(ValueError):
        SearchConfig(1, candidate_limit=0)
    with pytest.raises(ValueError):
        Search(encode(ball(), 1), SearchConfig(2))


def test_durative_pairs_reported():
    g = ground(*_gen(1))
    p = encode(g, 3)
    for t in Search(p, SearchConfig(3, candidate_limit=50)):
        for name, i, j in t.durative_pairs():
            assert i < j
            assert ("occurs", ("start", name), i) in t.atoms
