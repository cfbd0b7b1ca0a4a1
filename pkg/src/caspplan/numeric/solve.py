"""Exact linear solving and dispatch between the linear and nonlinear paths."""

from __future__ import annotations

from fractions import Fraction

from ..expr import affine, fold_constants, substitute
from .branch import solve_nonlinear
from .network import DEFAULT_TOL, ConstraintNetwork, NumericSolution, SolveResult, check_solution
from .presolve import presolve
from .simplex import Infeasible, LinearConstraint, solve_constraints


def _linear_rows(pre):
    rows = []
    for i, c in enumerate(pre.constraints):
        aff = affine(c.expr)
        if aff is None:
            return None
        coeffs, const = aff
        rows.append(LinearConstraint(tuple(sorted(coeffs.items(), key=lambda kv: repr(kv[0]))),
                                     c.op, -const, i))
    return rows


def _eliminated_bounds(net, pre):
    """Domain rows for presolve-eliminated variables, written over the kept ones."""
    resolved, rows = {}, []
    for key, e, origin in reversed(pre.eliminated):
        e = fold_constants(substitute(e, resolved))
        resolved[key] = e
        aff = affine(e)
        if aff is None:
            return None
        coeffs, const = aff
        terms = tuple(sorted(((k, v) for k, v in coeffs.items() if v), key=lambda kv: repr(kv[0])))
        lo, hi = net.domain(key)
        cid = ("eliminated", key, origin)
        rows.append(LinearConstraint(terms, ">=", lo - const, cid))
        rows.append(LinearConstraint(terms, "<=", hi - const, cid))
    return rows


def solve_linear(net: ConstraintNetwork, pre=None) -> SolveResult:
    """
    Exact decision for an affine network.  ``core`` lists indices of original
    constraints that are jointly infeasible (an infeasible subset; minimality
    is best effort).
    """
    pre = pre or presolve(net)
    stats = {"eliminated": len(pre.eliminated), "method": "simplex"}
    if pre.infeasible is not None:
        return SolveResult("unsat", core=tuple(sorted(pre.infeasible)), stats=stats)
    rows = _linear_rows(pre)
    extra = _eliminated_bounds(net, pre)
    if rows is None or extra is None:
        raise ValueError("network is not linear")
    rows += extra
    bounds = {}
    keys = set(pre.variables()) | {k for r in extra for k, _ in r.coeffs}
    for k in sorted(keys, key=repr):
        lo, hi = net.domain(k)
        bounds[k] = (lo, hi, ("domain", k))
    try:
        values, sstats = solve_constraints(rows, bounds)
    except Infeasible as exc:
        core = set()
        for cid in exc.core:
            if isinstance(cid, int):
                core |= pre.constraints[cid].origin
            elif cid[0] == "eliminated":
                core |= cid[2]
        return SolveResult("unsat", core=tuple(sorted(core)), stats=stats)
    stats.update(sstats)
    full = pre.back_substitute(values)
    for k in net.variables():
        full.setdefault(k, Fraction(0))
    full = {k: Fraction(v) for k, v in full.items()}
    res = check_solution(net, full)
    return SolveResult("sat", NumericSolution(full, res, "simplex", stats), stats=stats)


def solve(net: ConstraintNetwork, tol: float = DEFAULT_TOL, budget: int = 10**6,
          deadline: float | None = None) -> SolveResult:
    """Linear networks (after equality elimination) go to the simplex, the rest to branch-and-prune."""
    pre = presolve(net)
    if pre.infeasible is not None:
        return SolveResult("unsat", core=tuple(sorted(pre.infeasible)),
                           stats={"method": "presolve"})
    if _linear_rows(pre) is not None:
        result = solve_linear(net, pre)
        if result.sat and result.solution.residual > tol:
            # float round-off in a sat answer should not pass as a verified solution
            return SolveResult("unknown", stats=result.stats)
        return result
    return solve_nonlinear(net, tol, budget, pre, deadline)
