"""
The planning loop: enumerate candidate traces, solve their numeric
constraints, validate the resulting timed plans and expand on violations.

Two protocols are offered.  ``fixed`` searches a single horizon H; ``iterative``
tries H = 0, 1, ..., H_max and reports the time accumulated over all horizons.
Numeric refutations from the exact linear solver are turned into nogoods over
the trace literals that switched the conflicting constraints on, which prunes
every later candidate containing the same combination.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .encoding import emit_text, encode
from .encoding.compile import tend
from .encoding.program import CaspProgram
from .numeric import ConstraintNetwork, solve
from .numeric.network import DEFAULT_TOL
from .expr import Comparison, Const
from .pddl.ground import GroundDurativeAction, GroundInstance, name_text
from .search import CandidateTrace, Search, SearchConfig, SearchTimeout, induced_constraints
from .validator import (DEFAULT_EPS, Happening, SeparationFailed, TimedPlan, ValidationReport,
                        _atomics, _interfere, epsilon_separate, expand, simulate)

log = logging.getLogger(__name__)

STATS_SCHEMA = 1
DEFAULT_MAX_STEPS = 30
DEFAULT_TIMEOUT = 600.0


class DeadlineExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    # fixed protocol when fixed_step is set, iterative up to max_steps otherwise
    max_steps: int = DEFAULT_MAX_STEPS
    fixed_step: int | None = None
    eps: float = DEFAULT_EPS
    granularity: float | None = None
    tol: float = DEFAULT_TOL
    timeout: float = DEFAULT_TIMEOUT
    # branch-and-prune nodes per numeric solve
    node_budget: int = 2000
    candidate_limit: int = 10**9
    expansion_cap: int = 20
    # atoms every candidate must contain, e.g. ("occurs", ("start", ("generate",)), 0)
    forced: tuple = ()
    learn_nogoods: bool = True
    emit_casp: str | None = None

    def __post_init__(self):
        if self.max_steps < 0 or (self.fixed_step is not None and self.fixed_step < 0):
            raise ValueError("horizons must be >= 0")
        for name in ("eps", "tol", "timeout"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.granularity is not None and not self.granularity > 0:
            raise ValueError("granularity must be positive")
        if self.node_budget < 1 or self.expansion_cap < 0:
            raise ValueError("budgets must be positive")

    @property
    def protocol(self) -> str:
        return "fixed" if self.fixed_step is not None else "iterative"

    def horizons(self) -> range:
        if self.fixed_step is not None:
            return range(self.fixed_step, self.fixed_step + 1)
        return range(0, self.max_steps + 1)


@dataclass
class PlannerResult:
    status: str  # "plan" | "no-plan-at-bound" | "resource-exhausted"
    plan: TimedPlan | None = None
    report: ValidationReport | None = None
    horizon: int | None = None
    stats: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.status == "plan"

    def to_json(self, timings: bool = True) -> dict:
        stats = dict(self.stats)
        if not timings:
            stats.pop("time", None)
        out = {"schema": STATS_SCHEMA, "status": self.status, "horizon": self.horizon,
               "plan": None, "stats": stats}
        if self.plan is not None:
            out["plan"] = [{"time": round(h.time, 9), "action": name_text(h.name),
                            "duration": round(h.duration, 9)} for h in self.plan.sorted()]
        return out


def _new_stats() -> dict:
    return {"candidates": 0, "csp_solves": 0, "csp_unsat": 0, "csp_unknown": 0,
            "expansions": 0, "abandoned": 0, "separations": 0, "separation_fallbacks": 0,
            "nogoods": 0, "horizons": [],
            "time": {"encode": 0.0, "search": 0.0, "solve": 0.0, "validate": 0.0, "total": 0.0}}


# -- plan extraction ---------------------------------------------------------------

def extract_plan(t: CandidateTrace, s, p: CaspProgram | None = None) -> TimedPlan:
    """
    Map ``occurs`` atoms to plan triples at the solved end time of their step.
    Durative copies pair their start step J with the end step K; processes and
    events are left out.
    """
    values = s.values if hasattr(s, "values") else s

    def at(i):
        return float(values[("tend", i)])

    kinds = p.happenings if p is not None else {}
    ends = {}
    for a in t.atoms:
        if a[0] == "occurs" and a[1][0] == "end" and len(a[1]) == 3:
            ends[(a[1][1], a[1][2])] = a[2]
    out = []
    for a in sorted((a for a in t.atoms if a[0] == "occurs"), key=lambda a: (a[2], repr(a[1]))):
        term, i = a[1], a[2]
        if term[0] == "start" and len(term) == 2 and isinstance(term[1], tuple):
            k = ends.get((term[1], i))
            if k is None:
                continue  # a process start
            out.append(Happening(at(i), term[1], at(k) - at(i), i, k))
        elif term[0] == "end" and len(term) > 1 and isinstance(term[1], tuple):
            continue
        elif kinds.get(term, ("action",))[0] == "action":
            out.append(Happening(at(i), term, 0.0, i, i))
    H = t.horizon
    timeline = tuple((float(values.get(("tstart", i), 0)), float(values.get(("tend", i), 0)))
                     for i in range(H + 1))
    return TimedPlan(tuple(out), timeline)


# -- separation fallback --------------------------------------------------------------

def separation_constraints(plan: TimedPlan, g: GroundInstance, eps: float) -> list | None:
    """
    ``tend(j) - tend(i) >= eps`` for interfering happenings at steps i < j that
    landed on the same time; None when two of them share a step.
    """
    atoms = []
    for idx, h in enumerate(plan.happenings):
        op = g.operator(h.name)
        steps = [h.step, h.end_step] if isinstance(op, GroundDurativeAction) else [h.step]
        for (tm, fp), st in zip(_atomics(h, op, 0.0), steps):
            atoms.append((idx, tm, fp, st))
    out = []
    for x in range(len(atoms)):
        for y in range(x + 1, len(atoms)):
            a, b = atoms[x], atoms[y]
            if a[0] == b[0] or abs(a[1] - b[1]) >= eps or not _interfere(a[2], b[2]):
                continue
            if a[3] is None or b[3] is None or a[3] == b[3]:
                return None
            i, j = sorted((a[3], b[3]))
            c = Comparison(">=", tend(j) - tend(i), Const(Fraction(str(eps))))
            if c not in out:
                out.append(c)
    return out


# -- the loop ------------------------------------------------------------------------

class _Run:
    def __init__(self, g: GroundInstance, cfg: PlannerConfig):
        self.g = g
        self.cfg = cfg
        self.stats = _new_stats()
        self.t0 = time.monotonic()
        self.deadline = self.t0 + cfg.timeout
        self.incomplete = False  # some candidate ended without a verdict

    def clock(self, phase: str, since: float) -> float:
        now = time.monotonic()
        self.stats["time"][phase] += now - since
        return now

    def check_deadline(self) -> None:
        if time.monotonic() > self.deadline:
            raise DeadlineExceeded()

    def solve(self, net: ConstraintNetwork):
        t = time.monotonic()
        self.stats["csp_solves"] += 1
        res = solve(net, self.cfg.tol, self.cfg.node_budget, self.deadline)
        self.clock("solve", t)
        if res.status == "unsat":
            self.stats["csp_unsat"] += 1
        elif res.status == "unknown":
            self.stats["csp_unknown"] += 1
        return res

    def learn(self, search: Search, net: ConstraintNetwork, core) -> None:
        if not self.cfg.learn_nogoods or not core or len(core) >= len(net.constraints):
            return
        lits = set()
        for idx in core:
            c = net.constraints[idx]
            if not c.family or c.family.startswith(("expand.", "separate.")):
                return
            lits |= c.origin
        if lits:
            search.add_nogood(lits)
            self.stats["nogoods"] += 1

    def validate(self, plan: TimedPlan) -> ValidationReport:
        t = time.monotonic()
        report = simulate(self.g, plan, self.cfg.granularity, self.cfg.tol)
        self.clock("validate", t)
        return report

    def finish(self, plan: TimedPlan):
        """Separate, re-validate at half granularity; None if that fails."""
        cfg = self.cfg
        t = time.monotonic()
        try:
            sep = epsilon_separate(plan, cfg.eps, self.g, cfg.granularity, cfg.tol)
        except SeparationFailed as exc:
            log.debug("separation failed: %s", exc)
            self.clock("validate", t)
            return None
        self.stats["separations"] += 1
        half = (cfg.granularity or 0.1) / 2
        report = simulate(self.g, sep, half, cfg.tol)
        self.clock("validate", t)
        return (sep, report) if report.valid else None

    def candidate(self, trace: CandidateTrace, prog: CaspProgram, search: Search):
        net = induced_constraints(trace, prog)
        for _ in range(self.cfg.expansion_cap + 1):
            self.check_deadline()
            res = self.solve(net)
            if res.status == "unsat":
                self.learn(search, net, res.core)
                return None
            if res.status == "unknown":
                self.incomplete = True
                return None
            plan = extract_plan(trace, res.solution, prog)
            report = self.validate(plan)
            if report.valid:
                done = self.finish(plan)
                if done is not None:
                    return done
                return self.fallback(trace, prog, net, plan)
            if report.condition is None or report.step is None:
                return None
            net = expand(report, net, prog)
            self.stats["expansions"] += 1
        self.stats["abandoned"] += 1
        return None

    def fallback(self, trace, prog, net, plan):
        """Re-solve with interfering happenings forced apart in time."""
        extra = separation_constraints(plan, self.g, self.cfg.eps)
        if not extra:
            return None
        self.stats["separation_fallbacks"] += 1
        net = net.copy()
        for c in extra:
            net.add(c, "separate.gap")
        res = self.solve(net)
        if not res.sat:
            return None
        plan = extract_plan(trace, res.solution, prog)
        if not self.validate(plan).valid:
            return None
        return self.finish(plan)

    def horizon(self, H: int):
        cfg = self.cfg
        t = time.monotonic()
        prog = encode(self.g, H)
        if cfg.emit_casp:
            with open(cfg.emit_casp, "w", encoding="utf-8") as fh:
                fh.write(emit_text(prog))
        t = self.clock("encode", t)
        search = Search(prog, SearchConfig(H, cfg.candidate_limit, tuple(cfg.forced),
                                           deadline=self.deadline))
        self.stats["horizons"].append(H)
        while True:
            try:
                trace = search.next()
            except SearchTimeout:
                raise DeadlineExceeded() from None
            t = self.clock("search", t)
            if trace is None:
                if search.stats["candidates"] >= cfg.candidate_limit:
                    self.incomplete = True
                return None
            self.stats["candidates"] += 1
            found = self.candidate(trace, prog, search)
            t = time.monotonic()
            if found is not None:
                return found

    def run(self) -> PlannerResult:
        result = None
        try:
            for H in self.cfg.horizons():
                found = self.horizon(H)
                if found is not None:
                    plan, report = found
                    result = PlannerResult("plan", plan, report, H, self.stats)
                    break
        except DeadlineExceeded:
            result = PlannerResult("resource-exhausted", stats=self.stats)
        if result is None:
            status = "resource-exhausted" if self.incomplete else "no-plan-at-bound"
            result = PlannerResult(status, stats=self.stats)
        self.stats["time"]["total"] = time.monotonic() - self.t0
        return result


def plan(g: GroundInstance, cfg: PlannerConfig | None = None) -> PlannerResult:
    """Run the planning loop under ``cfg`` (iterative deepening up to 30 steps by default)."""
    return _Run(g, cfg or PlannerConfig()).run()


def parse_heuristic(text: str) -> tuple:
    """
    ``force=<happening>@<step>`` to an atom; the happening is an action such
    as ``(refuel tank1)`` or a durative start ``start(generate)``.
    """
    key, sep, val = text.partition("=")
    if key.strip() != "force" or not sep or "@" not in val:
        raise ValueError(f"unsupported heuristic {text!r}; expected force=<happening>@<step>")
    term, _, step = val.rpartition("@")
    term = term.strip()
    try:
        step_no = int(step)
    except ValueError:
        raise ValueError(f"bad step in heuristic {text!r}") from None
    if term.startswith("start(") and term.endswith(")"):
        name = tuple(term[6:-1].strip("() ").lower().split())
        happening = ("start", name)
    else:
        happening = tuple(term.strip("() ").lower().split())
    if not happening or not happening[-1]:
        raise ValueError(f"empty happening in heuristic {text!r}")
    return ("occurs", happening, step_no)
