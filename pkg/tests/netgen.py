"""Random affine constraint networks."""

from __future__ import annotations

import random
from fractions import Fraction

from caspplan.expr import BinOp, Comparison, Const, Var
from caspplan.numeric import ConstraintNetwork

OPS = ("<=", "<", ">=", ">", "=", "!=")


def random_affine_network(rng: random.Random, max_vars: int = 6) -> ConstraintNetwork:
    n = rng.randint(1, max_vars)
    keys = [("x", i) for i in range(n)]
    net = ConstraintNetwork()
    for _ in range(rng.randint(1, n + 3)):
        terms = rng.sample(keys, rng.randint(1, min(3, n)))
        e = Const(Fraction(rng.randint(-5, 5)))
        for k in terms:
            e = BinOp("+", e, BinOp("*", Const(Fraction(rng.choice([-3, -2, -1, 1, 2, 3]))),
                                    Var(k)))
        op = rng.choices(OPS, weights=(4, 3, 4, 3, 2, 1))[0]
        net.add(Comparison(op, e, Const(Fraction(rng.randint(-4, 4)))), "random")
    if rng.random() < 0.3:
        k = rng.choice(keys)
        net.domains[k] = (Fraction(rng.randint(-3, 0)), Fraction(rng.randint(0, 3)))
    return net
