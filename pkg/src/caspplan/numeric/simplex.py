"""
Exact bounded simplex for conjunctions of linear constraints.

General-simplex formulation: each non-trivial linear form gets a slack
variable, all constraints become bounds, and Bland's rule drives pivoting over
``Fraction`` arithmetic.  Strict bounds are handled with delta-rationals
``c + k*delta`` (pairs compared lexicographically) and a concrete delta is
chosen at the end, so strict inequalities hold exactly.  An infeasible check
returns the ids of the bounds in the violated row, a conflict set; ``!=`` is
handled by splitting into ``<`` and ``>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

ZERO = (Fraction(0), Fraction(0))


def _add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _scale(a, k):
    return (a[0] * k, a[1] * k)


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coeffs[k] * k) op rhs``; ``cid`` names it in conflict sets."""

    coeffs: tuple  # ((key, Fraction), ...)
    op: str
    rhs: Fraction
    cid: object


class Infeasible(Exception):
    def __init__(self, core):
        super().__init__("infeasible")
        self.core = frozenset(core)


class _Tableau:
    def __init__(self):
        self.index: dict = {}  # key -> var number
        self.names: list = []
        self.rows: dict = {}  # basic var -> {nonbasic var: coeff}
        self.lower: dict = {}  # var -> (bound, cid)
        self.upper: dict = {}
        self.value: list = []
        self.slacks: dict = {}  # normalised form -> var

    def var(self, key) -> int:
        if key not in self.index:
            self.index[key] = len(self.names)
            self.names.append(key)
            self.value.append(ZERO)
        return self.index[key]

    def slack(self, coeffs: dict) -> int:
        form = tuple(sorted(coeffs.items()))
        if form in self.slacks:
            return self.slacks[form]
        s = len(self.names)
        self.names.append(("slack", s))
        self.value.append(ZERO)
        row = {}
        for v, c in coeffs.items():
            if v in self.rows:  # never happens for fresh problem vars, kept for safety
                for w, d in self.rows[v].items():
                    row[w] = row.get(w, 0) + c * d
            else:
                row[v] = row.get(v, 0) + c
        self.rows[s] = {k: c for k, c in row.items() if c != 0}
        self.value[s] = self.row_value(s)
        self.slacks[form] = s
        return s

    def row_value(self, b: int):
        total = ZERO
        for v, c in self.rows[b].items():
            total = _add(total, _scale(self.value[v], c))
        return total

    # -- bounds ------------------------------------------------------------------

    def assert_lower(self, v: int, bound, cid) -> None:
        cur = self.lower.get(v)
        if cur is not None and cur[0] >= bound:
            return
        up = self.upper.get(v)
        if up is not None and bound > up[0]:
            raise Infeasible({cid, up[1]})
        self.lower[v] = (bound, cid)
        if v not in self.rows and self.value[v] < bound:
            self.update(v, bound)

    def assert_upper(self, v: int, bound, cid) -> None:
        cur = self.upper.get(v)
        if cur is not None and cur[0] <= bound:
            return
        lo = self.lower.get(v)
        if lo is not None and bound < lo[0]:
            raise Infeasible({cid, lo[1]})
        self.upper[v] = (bound, cid)
        if v not in self.rows and self.value[v] > bound:
            self.update(v, bound)

    def update(self, v: int, new) -> None:
        delta = _sub(new, self.value[v])
        for b, row in self.rows.items():
            c = row.get(v)
            if c:
                self.value[b] = _add(self.value[b], _scale(delta, c))
        self.value[v] = new

    # -- pivoting ------------------------------------------------------------------

    def pivot(self, b: int, n: int) -> None:
        row = self.rows.pop(b)
        a = row.pop(n)
        # n = (b - sum(row)) / a
        new = {b: Fraction(1) / a}
        for v, c in row.items():
            new[v] = -c / a
        for other, orow in self.rows.items():
            c = orow.pop(n, None)
            if c is None:
                continue
            for v, d in new.items():
                x = orow.get(v, 0) + c * d
                if x == 0:
                    orow.pop(v, None)
                else:
                    orow[v] = x
        self.rows[n] = new

    def pivot_and_update(self, b: int, n: int, target) -> None:
        a = self.rows[b][n]
        theta = _scale(_sub(target, self.value[b]), Fraction(1) / a)
        self.value[b] = target
        self.value[n] = _add(self.value[n], theta)
        for other, row in self.rows.items():
            if other == b:
                continue
            c = row.get(n)
            if c:
                self.value[other] = _add(self.value[other], _scale(theta, c))
        self.pivot(b, n)

    def check(self, max_pivots: int = 100000) -> int:
        pivots = 0
        while True:
            bad = None
            for b in sorted(self.rows):
                val = self.value[b]
                lo, up = self.lower.get(b), self.upper.get(b)
                if lo is not None and val < lo[0]:
                    bad = (b, lo, True)
                    break
                if up is not None and val > up[0]:
                    bad = (b, up, False)
                    break
            if bad is None:
                return pivots
            b, bound, raise_it = bad
            row = self.rows[b]
            pick = None
            for n in sorted(row):
                c = row[n]
                if (c > 0) == raise_it:
                    up = self.upper.get(n)
                    if up is None or self.value[n] < up[0]:
                        pick = n
                        break
                else:
                    lo = self.lower.get(n)
                    if lo is None or self.value[n] > lo[0]:
                        pick = n
                        break
            if pick is None:
                core = {bound[1]}
                for n, c in row.items():
                    if (c > 0) == raise_it:
                        core.add(self.upper[n][1])
                    else:
                        core.add(self.lower[n][1])
                raise Infeasible(core)
            self.pivot_and_update(b, pick, bound[0])
            pivots += 1
            if pivots > max_pivots:
                raise RuntimeError("simplex pivot limit exceeded")

    def concrete_delta(self) -> Fraction:
        """Largest delta (capped at 1) keeping every bound satisfied."""
        delta = Fraction(1)
        for v in range(len(self.names)):
            val = self.value[v]
            for bound, is_lower in ((self.lower.get(v), True), (self.upper.get(v), False)):
                if bound is None:
                    continue
                lo, hi = (bound[0], val) if is_lower else (val, bound[0])
                # need lo.c + lo.k*d <= hi.c + hi.k*d
                dc, dk = hi[0] - lo[0], lo[1] - hi[1]
                if dk > 0 and dc > 0:
                    delta = min(delta, dc / dk)
        return delta


def _form(c: LinearConstraint):
    coeffs = {k: Fraction(v) for k, v in c.coeffs if v != 0}
    return coeffs


def _solve_split(constraints, keys, bounds):
    tab = _Tableau()
    for k in keys:
        tab.var(k)
    for k, (lo, hi, cid) in bounds.items():
        v = tab.var(k)
        if lo is not None:
            tab.assert_lower(v, (Fraction(lo), Fraction(0)), cid)
        if hi is not None:
            tab.assert_upper(v, (Fraction(hi), Fraction(0)), cid)
    for c in constraints:
        coeffs = _form(c)
        rhs = Fraction(c.rhs)
        if not coeffs:
            ok = {"<=": 0 <= rhs, "<": 0 < rhs, "=": rhs == 0, ">=": 0 >= rhs,
                  ">": 0 > rhs}[c.op]
            if not ok:
                raise Infeasible({c.cid})
            continue
        if len(coeffs) == 1:
            (k, a), = coeffs.items()
            v = tab.var(k)
            rhs = rhs / a
            op = c.op if a > 0 else {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "=": "="}[c.op]
        else:
            # normalise so the leading coefficient is 1, letting equal forms share a slack
            vars_ = {tab.var(k): a for k, a in coeffs.items()}
            lead = vars_[min(vars_)]
            vars_ = {v: a / lead for v, a in vars_.items()}
            rhs = rhs / lead
            op = c.op if lead > 0 else {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "=": "="}[c.op]
            v = tab.slack(vars_)
        if op in ("<=", "="):
            tab.assert_upper(v, (rhs, Fraction(0)), c.cid)
        if op in (">=", "="):
            tab.assert_lower(v, (rhs, Fraction(0)), c.cid)
        if op == "<":
            tab.assert_upper(v, (rhs, Fraction(-1)), c.cid)
        if op == ">":
            tab.assert_lower(v, (rhs, Fraction(1)), c.cid)
    pivots = tab.check()
    d = tab.concrete_delta()
    values = {}
    for k, v in tab.index.items():
        c, kd = tab.value[v]
        values[k] = c + kd * d
    return values, pivots


def solve_constraints(constraints, bounds=None):
    """
    Solve a list of :class:`LinearConstraint`; ``bounds`` maps keys to
    ``(lo, hi, cid)``.  Returns ``(values, stats)`` or raises :class:`Infeasible`.
    """
    bounds = bounds or {}
    keys = []
    seen = set()
    for c in constraints:
        for k, _ in c.coeffs:
            if k not in seen:
                seen.add(k)
                keys.append(k)
    keys.sort(key=repr)
    plain = [c for c in constraints if c.op != "!="]
    splits = [c for c in constraints if c.op == "!="]
    stats = {"pivots": 0, "splits": 0}

    def rec(fixed, rest):
        if not rest:
            values, pivots = _solve_split(fixed, keys, bounds)
            stats["pivots"] += pivots
            return values
        c, tail = rest[0], rest[1:]
        cores = set()
        for op in ("<", ">"):
            stats["splits"] += 1
            try:
                return rec(fixed + [LinearConstraint(c.coeffs, op, c.rhs, c.cid)], tail)
            except Infeasible as exc:
                cores |= exc.core
        raise Infeasible(cores | {c.cid})

    values = rec(plain, splits)
    for k in keys:
        values.setdefault(k, Fraction(0))
    return values, stats
