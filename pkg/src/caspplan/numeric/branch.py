"""
Interval branch-and-prune for nonlinear networks.

Boxes are explored depth first.  Each box is contracted by hull consistency;
an empty box is discarded with a proof.  Surviving boxes get a point search
(bounded least squares started from a few points of the box) and are accepted
as soon as the point passes :func:`check_solution`; otherwise the widest
relative interval is bisected.  The verdict is ``unsat`` only when every box was
refuted by propagation.
"""

from __future__ import annotations

import math
import time
import warnings

import numpy as np
from scipy.optimize import least_squares

from ..expr import EvaluationError, evaluate
from .interval import compile_tape, evaluate_tape, hc4
from .network import DEFAULT_TOL, ConstraintNetwork, NumericSolution, SolveResult, check_solution
from .presolve import presolve

STRICT_MARGIN = 10.0  # strict comparisons need a slack of tol * STRICT_MARGIN
MIN_WIDTH = 1e-12


def _residuals(tapes, x, tol):
    out = np.empty(len(tapes))
    margin = tol * STRICT_MARGIN
    for i, t in enumerate(tapes):
        v = evaluate_tape(t, x)
        if not math.isfinite(v):
            v = 1e150
        op = t.op
        if op == "=":
            r = v
        elif op == "<=":
            r = max(v, 0.0)
        elif op == "<":
            r = max(v + margin * 1.5, 0.0)
        elif op == ">=":
            r = max(-v, 0.0)
        elif op == ">":
            r = max(-v + margin * 1.5, 0.0)
        else:
            r = max(margin * 1.5 - abs(v), 0.0)
        out[i] = r
    return out


def _accept(net, pre, keys, x, tol):
    """Full assignment for ``x`` if it satisfies the original network within tol."""
    values = {k: float(v) for k, v in zip(keys, x)}
    try:
        full = pre.back_substitute(values)
    except (EvaluationError, ZeroDivisionError, ValueError, OverflowError):
        return None
    full = {k: float(v) for k, v in full.items()}
    for k in net.variables():
        full.setdefault(k, 0.0)
    res = check_solution(net, full)
    if res > tol:
        return None
    margin = tol * STRICT_MARGIN
    for c in net.constraints:
        op = c.comparison.op
        if op not in ("<", ">", "!="):
            continue
        # strict comparisons must hold with a visible margin
        try:
            d = float(evaluate(c.comparison.lhs, full) - evaluate(c.comparison.rhs, full))
        except (EvaluationError, ZeroDivisionError, ValueError, OverflowError):
            return None
        if (op == "<" and d > -margin) or (op == ">" and d < margin) or \
                (op == "!=" and abs(d) < margin):
            return None
    return full, res


def _starts(box):
    pts = []
    for target in (1.0, 10.0, None):
        x = []
        for lo, hi in box:
            if target is None:
                span = min(hi - lo, 100.0) if math.isfinite(hi - lo) else 100.0
                base = lo if math.isfinite(lo) else (hi - span if math.isfinite(hi) else -span / 2)
                x.append(base + span / 2)
            else:
                x.append(min(max(target, lo), hi))
        pts.append(np.array(x, dtype=float))
    return pts


def _polish(tapes, box, x0, tol):
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    same = hi <= lo
    hi = np.where(same, lo + 1e-300, hi)
    x0 = np.clip(x0, lo, hi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            r = least_squares(lambda x: _residuals(tapes, x, tol), x0, bounds=(lo, hi),
                              xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
        except (ValueError, FloatingPointError):
            return x0
    return r.x


def solve_nonlinear(net: ConstraintNetwork, tol: float = DEFAULT_TOL,
                    budget: int = 10**6, pre=None, deadline: float | None = None) -> SolveResult:
    if tol <= 0:
        raise ValueError("tol must be positive")
    pre = pre or presolve(net)
    stats = {"nodes": 0, "eliminated": len(pre.eliminated), "method": "branch-and-prune"}
    if pre.infeasible is not None:
        return SolveResult("unsat", core=tuple(sorted(pre.infeasible)), stats=stats)
    keys = pre.variables()
    index = {k: i for i, k in enumerate(keys)}
    tapes = [compile_tape(c.expr, c.op, index) for c in pre.constraints]
    box0 = []
    for k in keys:
        lo, hi = net.domain(k)
        box0.append((float(lo), float(hi)))
    stack = [box0]
    proof = True
    while stack:
        box = stack.pop()
        stats["nodes"] += 1
        if stats["nodes"] > budget or (deadline is not None and time.monotonic() > deadline):
            return SolveResult("unknown", stats=stats)
        if not hc4(tapes, box):
            continue
        if not keys:
            got = _accept(net, pre, keys, [], tol)
            if got:
                full, res = got
                return SolveResult("sat", NumericSolution(full, res, "branch-and-prune", stats),
                                   stats=stats)
            proof = False
            continue
        for x0 in _starts(box):
            x = _polish(tapes, box, x0, tol)
            got = _accept(net, pre, keys, x, tol)
            if got:
                full, res = got
                return SolveResult("sat", NumericSolution(full, res, "branch-and-prune", stats),
                                   stats=stats)
        # bisect the widest relative interval
        best, width = None, 0.0
        for i, (lo, hi) in enumerate(box):
            w = (hi - lo) / max(1.0, abs(lo + hi) / 2 if math.isfinite(lo + hi) else 1.0)
            if w > width:
                best, width = i, w
        if best is None or width <= MIN_WIDTH:
            proof = False
            continue
        lo, hi = box[best]
        mid = (lo + hi) / 2 if math.isfinite(lo + hi) else 0.0
        if not lo < mid < hi:
            proof = False
            continue
        left, right = list(box), list(box)
        left[best] = (lo, mid)
        right[best] = (mid, hi)
        stack.append(right)
        stack.append(left)
    if proof:
        return SolveResult("unsat", core=tuple(range(len(net.constraints))), stats=stats)
    return SolveResult("unknown", stats=stats)
