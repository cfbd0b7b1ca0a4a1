"""
Brute-force reference implementations used only by the tests.

``stable_models`` enumerates every subset of the head atoms of a ground
program (vectorised over bitmasks) and keeps the ones equal to the least model
of their reduct.  ``fm_feasible`` decides an affine system exactly by
Fourier-Motzkin elimination with strictness tracking.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import numpy as np

from caspplan.expr import affine

MAX_ORACLE_ATOMS = 20


# -- stable models -----------------------------------------------------------------

def _mask(atoms, index):
    m = 0
    for a in atoms:
        if a not in index:
            return None  # atom never derivable: the literal is always false
        m |= 1 << index[a]
    return m


def stable_models(rules) -> set:
    """
    All stable models of the Boolean part of ``rules`` (``GroundRule`` objects).

    Choice rules use the usual reduct: an element in the candidate with a true
    body becomes a definite rule, cardinality bounds act as constraints.
    """
    rules = [r for r in rules if r.kind != "constraint"]
    heads = []
    for r in rules:
        if r.kind in ("fact", "rule"):
            heads.append(r.head)
        elif r.kind == "choice":
            heads.extend(r.elements)
    atoms = sorted(set(heads), key=repr)
    if len(atoms) > MAX_ORACLE_ATOMS:
        raise ValueError(f"{len(atoms)} atoms is too many for brute force")
    index = {a: i for i, a in enumerate(atoms)}
    n = len(atoms)
    cand = np.arange(1 << n, dtype=np.int64)
    ok = np.ones(cand.shape, dtype=bool)

    compiled = []
    for r in rules:
        pos = _mask(r.pos, index)
        if pos is None:
            continue  # body can never hold
        neg = sum(1 << index[a] for a in r.neg if a in index)
        compiled.append((r, pos, neg))

    def body(m, pos, neg):
        return ((m & pos) == pos) & ((m & neg) == 0)

    # classical satisfaction
    for r, pos, neg in compiled:
        b = body(cand, pos, neg)
        if r.kind == "denial":
            ok &= ~b
        elif r.kind in ("fact", "rule"):
            ok &= ~b | ((cand >> index[r.head]) & 1).astype(bool)
        else:
            count = np.zeros(cand.shape, dtype=np.int64)
            for e in r.elements:
                count += (cand >> index[e]) & 1
            lo = r.lower if r.lower is not None else 0
            hi = r.upper if r.upper is not None else len(r.elements)
            ok &= ~b | ((count >= lo) & (count <= hi))
    cand = cand[ok]

    # least model of the reduct, all candidates at once
    least = np.zeros(cand.shape, dtype=np.int64)
    for _ in range(n + 1):
        before = least.copy()
        for r, pos, neg in compiled:
            if r.kind == "denial":
                continue
            applies = ((cand & neg) == 0) & ((least & pos) == pos)
            if r.kind in ("fact", "rule"):
                least |= np.where(applies, 1 << index[r.head], 0)
            else:
                for e in r.elements:
                    bit = 1 << index[e]
                    least |= np.where(applies & ((cand & bit) != 0), bit, 0)
        if np.array_equal(before, least):
            break
    keep = cand[least == cand]
    return {frozenset(a for a in atoms if (int(m) >> index[a]) & 1) for m in keep}


# -- Fourier-Motzkin ------------------------------------------------------------------

def _rows(comparison):
    """``lhs - rhs`` as (coeffs, const); raises for non-affine input."""
    a, b = affine(comparison.lhs), affine(comparison.rhs)
    if a is None or b is None:
        raise ValueError("not affine")
    coeffs = dict(a[0])
    for k, v in b[0].items():
        coeffs[k] = coeffs.get(k, 0) - v
    return {k: Fraction(v) for k, v in coeffs.items() if v != 0}, Fraction(a[1] - b[1])


def _as_geq(coeffs, const, op):
    """Rows ``c.x + k >= 0`` (strict flag) equivalent to ``expr op 0``; ``!=`` handled by caller."""
    neg = {k: -v for k, v in coeffs.items()}
    if op == ">=":
        return [(coeffs, const, False)]
    if op == ">":
        return [(coeffs, const, True)]
    if op == "<=":
        return [(neg, -const, False)]
    if op == "<":
        return [(neg, -const, True)]
    if op == "=":
        return [(coeffs, const, False), (neg, -const, False)]
    raise ValueError(op)


def _normalise(rows):
    """Scale rows to a unit leading coefficient and keep the tightest of each direction."""
    best = {}
    for coeffs, const, strict in rows:
        if not coeffs:
            if const < 0 or (strict and const == 0):
                return None
            continue
        lead = abs(coeffs[min(coeffs, key=repr)])
        coeffs = {k: v / lead for k, v in coeffs.items()}
        const = const / lead
        key = tuple(sorted(coeffs.items(), key=repr))
        old = best.get(key)
        # smaller constant is tighter; at equal constants strict is tighter
        if old is None or const < old[1] or (const == old[1] and strict and not old[2]):
            best[key] = (coeffs, const, strict)
    return list(best.values())


def _eliminate(rows, keys) -> bool:
    rows = _normalise(rows)
    remaining = set(keys)
    while rows is not None and remaining:
        def cost(k):
            p = sum(1 for r in rows if r[0].get(k, 0) > 0)
            n = sum(1 for r in rows if r[0].get(k, 0) < 0)
            return (p * n - p - n, repr(k))
        k = min(remaining, key=cost)
        remaining.discard(k)
        pos, neg, rest = [], [], []
        for r in rows:
            c = r[0].get(k, 0)
            (pos if c > 0 else neg if c < 0 else rest).append(r)
        new = list(rest)
        for (cp, kp, sp), (cn, kn, sn) in product(pos, neg):
            a, b = cp[k], -cn[k]
            coeffs = {}
            for v in set(cp) | set(cn):
                if v == k:
                    continue
                x = b * cp.get(v, 0) + a * cn.get(v, 0)
                if x:
                    coeffs[v] = x
            new.append((coeffs, b * kp + a * kn, sp or sn))
        rows = _normalise(new)
    return rows is not None


def fm_feasible(net) -> bool:
    """Exact feasibility of an affine ``ConstraintNetwork`` including variable domains."""
    base, splits = [], []
    keys = net.variables()
    for c in net.constraints:
        coeffs, const = _rows(c.comparison)
        if c.comparison.op == "!=":
            splits.append((coeffs, const))
        else:
            base.extend(_as_geq(coeffs, const, c.comparison.op))
    for k in keys:
        lo, hi = net.domain(k)
        base.append(({k: Fraction(1)}, -Fraction(lo), False))
        base.append(({k: Fraction(-1)}, Fraction(hi), False))
    for signs in product(("<", ">"), repeat=len(splits)):
        rows = list(base)
        for (coeffs, const), op in zip(splits, signs):
            rows.extend(_as_geq(coeffs, const, op))
        if _eliminate(rows, keys):
            return True
    return False
