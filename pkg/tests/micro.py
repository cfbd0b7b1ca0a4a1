"""Random small ground instances for oracle comparisons."""

from __future__ import annotations

import random
from fractions import Fraction

from caspplan.expr import Comparison, Const, Var
from caspplan.pddl.ground import (GroundAction, GroundCondition, GroundDurativeAction,
                                  GroundEffects, GroundEvent, GroundInstance, GroundProcess)

X = ("x",)


def _literals(rng, fluents, k):
    picks = rng.sample(fluents, min(k, len(fluents)))
    return tuple((f, rng.random() < 0.6) for f in picks)


def _effects(rng, fluents):
    f = rng.choice(fluents)
    return GroundEffects(add=(f,)) if rng.random() < 0.5 else GroundEffects(delete=(f,))


def random_instance(rng: random.Random) -> GroundInstance:
    fluents = [(f"f{i}",) for i in range(rng.randint(1, 2))]
    positive = Comparison(">", Var(X), Const(Fraction(0)))
    actions = tuple(
        GroundAction((f"a{i}",), GroundCondition(_literals(rng, fluents, rng.randint(0, 1))),
                     _effects(rng, fluents))
        for i in range(rng.randint(0, 2)))
    processes = ()
    if rng.random() < 0.6:
        num = (positive,) if rng.random() < 0.6 else ()
        processes = (GroundProcess(("p",), GroundCondition(_literals(rng, fluents, 1), num),
                                   (("increase", X, Const(Fraction(1))),)),)
    events = ()
    if rng.random() < 0.4:
        events = (GroundEvent(("e",), GroundCondition(_literals(rng, fluents, 1)),
                              _effects(rng, fluents)),)
    durative = ()
    if rng.random() < 0.25:
        durative = (GroundDurativeAction(("d",), (("=", Const(Fraction(1))),),
                                         at_start=GroundCondition(_literals(rng, fluents, 1)),
                                         end_effects=_effects(rng, fluents)),)
    init = frozenset(f for f in fluents if rng.random() < 0.5)
    goal = GroundCondition(_literals(rng, fluents, rng.randint(0, 1)))
    return GroundInstance("micro", "micro", tuple(fluents), (X,), actions, durative, processes,
                          events, init, {X: Fraction(rng.randint(-1, 2))}, goal)
