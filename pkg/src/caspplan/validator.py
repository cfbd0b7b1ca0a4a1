"""
Plan validation by simulation, expansion of violated invariants and
epsilon-separation of interfering happenings.

The simulator replays a timed plan against the ground instance.  Happenings
that share a time point read the same state and apply their effects together;
events then fire while enabled.  Between two happening times the set of running
durative actions and processes is fixed, and numeric fluents evolve under their
rates: in closed form when every active rate is constant, otherwise by
fourth-order Runge-Kutta sub-steps.  At every sample the simulator audits

* over-all conditions of executing durative actions,
* preconditions of running processes (a running process whose precondition
  fails should have stopped),
* preconditions of idle processes and of events (must semantics: they should
  have started or fired).

Numeric conditions use a tolerance band: a comparison is only violated when it
fails by more than ``tol``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (BinOp, Comparison, Const, EvaluationError, Expr, Var, evaluate, map_keys,
                   render_infix, variables)
from .numeric.network import DEFAULT_TOL, ConstraintNetwork
from .pddl.ground import GroundDurativeAction, GroundInstance, name_text

DEFAULT_EPS = 0.001
MAX_GRANULARITY = 0.1
MIN_SUBSTEPS = 10
TIME_SLACK = 1e-9
MAX_EVENT_ROUNDS = 100
TRACE_SAMPLES = 50  # recorded samples per segment


class MalformedPlan(ValueError):
    pass


class SeparationFailed(RuntimeError):
    pass


# -- plans -----------------------------------------------------------------------

@dataclass(frozen=True)
class Happening:
    """One plan triple: ``time``, operator ``name``, ``duration`` (0 for actions)."""

    time: float
    name: tuple
    duration: float = 0.0
    step: int | None = None
    end_step: int | None = None

    @property
    def end(self) -> float:
        return self.time + self.duration


@dataclass(frozen=True)
class TimedPlan:
    happenings: tuple = ()
    # solved (tstart, tend) per state, when the plan comes from a candidate trace
    timeline: tuple | None = None

    def __len__(self):
        return len(self.happenings)

    def __iter__(self):
        return iter(self.happenings)

    def sorted(self) -> list:
        return sorted(self.happenings, key=lambda h: (h.time, name_text(h.name), h.duration))

    def text(self) -> str:
        return format_plan(self)


def format_plan(plan: TimedPlan) -> str:
    lines = [f"{h.time:.3f}: {name_text(h.name)} [{h.duration:.3f}]" for h in plan.sorted()]
    return "".join(line + "\n" for line in lines)


_LINE = re.compile(r"^\s*([-+0-9.eE]+)\s*:\s*\(([^()]*)\)\s*(?:\[\s*([-+0-9.eE]+)\s*\])?\s*$")


def parse_plan(text: str) -> TimedPlan:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split(";", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise MalformedPlan(f"line {n}: cannot read happening {line!r}")
        name = tuple(m.group(2).lower().split())
        if not name:
            raise MalformedPlan(f"line {n}: empty action")
        t, d = float(m.group(1)), float(m.group(3) or 0.0)
        if not (t >= 0 and d >= 0):
            raise MalformedPlan(f"line {n}: negative time or duration")
        out.append(Happening(t, name, d))
    return TimedPlan(tuple(out))


# -- reports ---------------------------------------------------------------------

@dataclass
class ValidationReport:
    verdict: str  # "valid" | "invalid"
    kind: str = ""  # over-all, process, must-start, event, precondition, duration, goal, ...
    owner: tuple | None = None
    # the comparison (over fluent keys) that has to hold at t_star
    condition: Comparison | None = None
    description: str = ""
    t_star: float | None = None
    t_worst: float | None = None
    step: int | None = None
    # durative actions and processes running in the violating segment
    active: tuple = ()
    segment: tuple | None = None
    # t_star and t_worst relative to the start of the enclosing state
    offset: float | None = None
    worst_offset: float | None = None
    trace: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.verdict == "valid"

    def to_json(self) -> dict:
        out = {"verdict": self.verdict}
        if not self.valid:
            out.update({
                "kind": self.kind,
                "owner": name_text(self.owner) if self.owner else None,
                "condition": _cmp_text(self.condition) if self.condition is not None else None,
                "description": self.description,
                "t_star": self.t_star,
                "t_worst": self.t_worst,
                "step": self.step,
                "active": [name_text(a) for a in self.active],
            })
        out["trace"] = [{"t": t, "values": vals} for t, vals in self.trace]
        return out


def _key_text(k) -> str:
    return name_text(k) if isinstance(k, tuple) else str(k)


def _cmp_text(c: Comparison) -> str:
    return f"{render_infix(c.lhs, _key_text)} {c.op} {render_infix(c.rhs, _key_text)}"


# -- numeric helpers ---------------------------------------------------------------

def margin(c: Comparison, env) -> float:
    """Signed satisfaction margin of ``c``: positive inside, negative outside."""
    try:
        s = float(evaluate(c.lhs, env)) - float(evaluate(c.rhs, env))
    except (EvaluationError, ZeroDivisionError, ValueError, OverflowError):
        return -math.inf
    if c.op in (">", ">="):
        return s
    if c.op in ("<", "<="):
        return -s
    if c.op == "=":
        return -abs(s)
    return abs(s)


def _active_true(c: Comparison, env, tol: float) -> bool:
    """Used to decide whether a process runs or an event fires."""
    m = margin(c, env)
    if c.op in ("<", ">", "!="):
        return m > tol
    return m >= -tol


def _bool_ok(literals, bools) -> bool:
    return all((atom in bools) == positive for atom, positive in literals)


def _sources_rates(sources) -> list:
    return [r for _, rates in sources for r in rates]


def _derivative(rates, env) -> dict:
    out = {}
    for kind, n, r in rates:
        v = float(evaluate(r, env))
        out[n] = out.get(n, 0.0) + (v if kind == "increase" else -v)
    return out


def _rk4(rates, x: dict, h: float) -> dict:
    def shifted(k, a):
        y = dict(x)
        for n, dv in k.items():
            y[n] = x[n] + a * dv
        return y
    k1 = _derivative(rates, x)
    k2 = _derivative(rates, shifted(k1, h / 2))
    k3 = _derivative(rates, shifted(k2, h / 2))
    k4 = _derivative(rates, shifted(k3, h))
    y = dict(x)
    for n in k1:
        y[n] = x[n] + h / 6 * (k1[n] + 2 * k2[n] + 2 * k3[n] + k4[n])
    return y


class _Flow:
    """State evolution over one segment from the state ``x0``."""

    def __init__(self, rates, x0: dict):
        self.rates = rates
        self.x0 = x0
        self.constant = all(not variables(r) for _, _, r in rates)
        self.slope = _derivative(rates, x0) if self.constant else None

    def advance(self, x: dict, tau: float, h: float) -> dict:
        """State at offset ``tau + h`` given the state ``x`` at offset ``tau``."""
        if h <= 0 or not self.rates:
            return dict(x)
        if self.constant:
            y = dict(self.x0)
            for n, dv in self.slope.items():
                y[n] = self.x0[n] + (tau + h) * dv
            return y
        return _rk4(self.rates, x, h)


# -- simulation --------------------------------------------------------------------

@dataclass
class _Instance:
    """A durative action copy being executed."""

    happening: Happening
    op: GroundDurativeAction


@dataclass
class _Check:
    kind: str
    owner: tuple
    conds: tuple
    # "hold": every sample must satisfy conds[0]
    # "must": the conjunction conds must not become true while idle
    mode: str

    def measure(self, env) -> float:
        """Positive when violated."""
        if self.mode == "hold":
            return -margin(self.conds[0], env)
        return min(margin(c, env) for c in self.conds)

    def condition(self, env) -> Comparison:
        if self.mode == "hold":
            return self.conds[0]
        # the conjunct that was last to become true must stay false
        return min(self.conds, key=lambda c: margin(c, env)).complement()


class _Invalid(Exception):
    def __init__(self, report: ValidationReport):
        super().__init__(report.description)
        self.report = report


def _substeps(length: float, granularity: float) -> int:
    # powers of two keep the samples of a halved granularity a superset
    m = MIN_SUBSTEPS
    while length / m > granularity:
        m *= 2
    return m


def _bisect(pred, lo: float, hi: float, iters: int = 60) -> float:
    """Smallest point in (lo, hi] where ``pred`` holds, assuming it holds at hi."""
    for _ in range(iters):
        mid = (lo + hi) / 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _golden_max(f, lo: float, hi: float, iters: int = 60) -> float:
    r = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - r * (b - a), a + r * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - r * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + r * (b - a)
            fd = f(d)
    return (a + b) / 2


class _Simulator:
    def __init__(self, g: GroundInstance, plan: TimedPlan, granularity, tol: float):
        if granularity is not None and not granularity > 0:
            raise ValueError("granularity must be positive")
        self.g = g
        self.plan = plan
        self.tol = tol
        self.granularity = granularity or MAX_GRANULARITY
        self.bools = set(g.init_true)
        self.nums = {n: float(v) for n, v in g.init_values.items()}
        self.running: list = []
        self.processes: list = []
        self.trace: list = []
        self.segment_start = 0.0
        self.groups = self._groups()

    def _groups(self) -> list:
        atoms = []
        for h in self.plan.happenings:
            if not (math.isfinite(h.time) and math.isfinite(h.duration)):
                raise MalformedPlan(f"non-finite time in {name_text(h.name)}")
            if h.time < -TIME_SLACK or h.duration < -TIME_SLACK:
                raise MalformedPlan(f"negative time or duration in {name_text(h.name)}")
            op = self.g.operator(h.name)
            if op is None or op in self.g.processes or op in self.g.events:
                raise MalformedPlan(f"unknown action {name_text(h.name)}")
            if isinstance(op, GroundDurativeAction):
                inst = _Instance(h, op)
                atoms.append((h.time, "start", h, op, inst))
                atoms.append((h.end, "end", h, op, inst))
            else:
                if h.duration > TIME_SLACK:
                    raise MalformedPlan(f"instantaneous action {name_text(h.name)} has a duration")
                atoms.append((h.time, "action", h, op, None))
        order = {"end": 0, "start": 1, "action": 2}

        def step_of(a):
            s = a[2].end_step if a[1] == "end" else a[2].step
            return -1 if s is None else s

        atoms.sort(key=lambda a: (a[0], order[a[1]], name_text(a[2].name), a[2].time))
        # happenings at one time point form one group, except that distinct
        # provenance steps at the same time are applied in step order
        clusters: list = []
        for a in atoms:
            if clusters and a[0] - clusters[-1][0][0] <= TIME_SLACK:
                clusters[-1].append(a)
            else:
                clusters.append([a])
        groups: list = []
        for cl in clusters:
            by_step: dict = {}
            for a in cl:
                by_step.setdefault(step_of(a), []).append(a)
            for s in sorted(by_step):
                groups.append((cl[0][0], by_step[s]))
        return groups

    # -- bookkeeping -----------------------------------------------------------

    def step_at(self, t: float) -> int:
        """The state whose interval ends at or contains ``t``."""
        tl = self.plan.timeline
        if tl:
            for i, (a, b) in enumerate(tl):
                if a + TIME_SLACK < t <= b + TIME_SLACK:
                    return i
            for i, (a, b) in enumerate(tl):
                if abs(b - t) <= TIME_SLACK:
                    return i
            return len(tl) - 1
        times = [gt for gt, _ in self.groups]
        base = 0 if times and times[0] <= TIME_SLACK else 1
        return base + sum(1 for x in times if x < t - TIME_SLACK)

    def sources(self) -> list:
        out = [inst.op for inst in self.running] + list(self.processes)
        return out

    def record(self, t: float, x: dict) -> None:
        self.trace.append((t, {_key_text(n): x[n] for n in self.g.numeric_fluents}))

    def state_start(self, step: int, t: float) -> float:
        tl = self.plan.timeline
        if tl and 0 <= step < len(tl):
            return tl[step][0]
        return self.segment_start

    def fail(self, kind, owner, cond, t, step, text, **kw) -> None:
        t_worst = kw.pop("t_worst", t)
        base = self.state_start(step, t)
        raise _Invalid(ValidationReport(
            "invalid", kind, owner, cond, text, t, t_worst, step,
            tuple(op.name for op in self.sources()), trace=self.trace,
            offset=max(0.0, t - base), worst_offset=max(0.0, t_worst - base), **kw))

    def check_condition(self, cond, kind, owner, t, step, env, bools) -> None:
        for atom, positive in cond.literals:
            if (atom in bools) != positive:
                lit = name_text(atom) if positive else f"(not {name_text(atom)})"
                self.fail(kind, owner, None, t, step, f"{kind} {lit} of {name_text(owner)} fails")
        for c in cond.numeric:
            if margin(c, env) < -self.tol:
                self.fail(kind, owner, c, t, step,
                          f"{kind} {_cmp_text(c)} of {name_text(owner)} fails")

    # -- happenings ------------------------------------------------------------

    def apply_effects(self, effs) -> None:
        pre = dict(self.nums)
        adds, dels, deltas, assigns = set(), set(), {}, {}
        for eff in effs:
            dels |= set(eff.delete)
            adds |= set(eff.add)
            for kind, n, e in eff.numeric:
                v = float(evaluate(e, pre))
                if kind == "assign":
                    assigns[n] = v
                else:
                    deltas[n] = deltas.get(n, 0.0) + (v if kind == "increase" else -v)
        self.bools = (self.bools - dels) | adds
        for n, d in deltas.items():
            if n not in assigns:
                self.nums[n] = pre[n] + d
        self.nums.update(assigns)

    def apply_group(self, t: float, atoms: list) -> None:
        env, bools = dict(self.nums), set(self.bools)
        effs = []
        for _, kind, h, op, inst in atoms:
            if kind == "action":
                step = h.step if h.step is not None else self.step_at(t)
                self.check_condition(op.precondition, "precondition", op.name, t, step, env, bools)
                effs.append(op.effects)
            elif kind == "start":
                step = h.step if h.step is not None else self.step_at(t)
                self.check_condition(op.at_start, "at-start", op.name, t, step, env, bools)
                for dop, e in op.duration:
                    want = float(evaluate(e, env))
                    c = Comparison(dop, Const(Fraction(h.duration)), Const(Fraction(want)))
                    if margin(c, {}) < -self.tol * max(1.0, abs(want)):
                        self.fail("duration", op.name, None, t, step,
                                  f"duration {h.duration} of {name_text(op.name)} "
                                  f"violates {dop} {want}")
                effs.append(op.start_effects)
            else:
                step = h.end_step if h.end_step is not None else self.step_at(t)
                self.check_condition(op.at_end, "at-end", op.name, t, step, env, bools)
                effs.append(op.end_effects)
        self.apply_effects(effs)
        for _, kind, h, op, inst in atoms:
            if kind == "start":
                self.running.append(inst)
        for _, kind, h, op, inst in atoms:
            if kind == "end":
                self.running = [r for r in self.running if r is not inst]

    def enabled(self, cond) -> bool:
        return _bool_ok(cond.literals, self.bools) and \
            all(_active_true(c, self.nums, self.tol) for c in cond.numeric)

    def fire_events(self, t: float) -> None:
        for _ in range(MAX_EVENT_ROUNDS):
            fired = [ev for ev in self.g.events if self.enabled(ev.precondition)]
            if not fired:
                return
            self.apply_effects([ev.effects for ev in fired])
        self.fail("event", None, None, t, self.step_at(t), "events keep firing")

    def activate(self) -> None:
        self.processes = [p for p in self.g.processes if self.enabled(p.precondition)]

    def settle(self, t: float) -> None:
        self.fire_events(t)
        self.activate()

    # -- continuous segments -----------------------------------------------------

    def checks(self, t: float) -> list:
        out = []
        for inst in self.running:
            op = inst.op
            for atom, positive in op.over_all.literals:
                if (atom in self.bools) != positive:
                    self.fail("over-all", op.name, None, t, self.step_at(t) if t else 0,
                              f"over-all {name_text(atom)} of {name_text(op.name)} fails")
            for c in op.over_all.numeric:
                out.append(_Check("over-all", op.name, (c,), "hold"))
        for p in self.processes:
            for c in p.precondition.numeric:
                out.append(_Check("process", p.name, (c,), "hold"))
        for p in self.g.processes:
            if p not in self.processes and p.precondition.numeric and \
                    _bool_ok(p.precondition.literals, self.bools):
                out.append(_Check("must-start", p.name, p.precondition.numeric, "must"))
        for ev in self.g.events:
            if ev.precondition.numeric and _bool_ok(ev.precondition.literals, self.bools):
                out.append(_Check("event", ev.name, ev.precondition.numeric, "must"))
        return out

    def segment(self, ta: float, tb: float) -> None:
        length = tb - ta
        x0 = dict(self.nums)
        rates = [r for op in self.sources() for r in op.rates]
        flow = _Flow(rates, x0)
        checks = self.checks(ta)
        m = _substeps(length, self.granularity)
        h = length / m
        stride = max(1, m // TRACE_SAMPLES)
        xs = [x0]
        bad = None
        x = x0
        for j in range(m + 1):
            if j:
                x = flow.advance(x, (j - 1) * h, h)
                xs.append(x)
            if j % stride == 0 or j == m:
                self.record(ta + j * h, x)
            if bad is None:
                for chk in checks:
                    if chk.measure(x) > self.tol:
                        bad = (j, chk)
                        break
        self.nums = xs[-1]
        if bad is None:
            return
        j, chk = bad

        def at(tau):
            k = min(int(tau / h), m)
            return flow.advance(xs[k], k * h, tau - k * h)

        if j == 0:
            t_cross, x_lo = 0.0, x0
        else:
            lo = (j - 1) * h
            t_cross = _bisect(lambda tau: chk.measure(at(tau)) >= 0, lo, j * h)
            x_lo = at(max(lo, t_cross - 1e-9 * max(1.0, length)))
        jw = max(range(j, m + 1), key=lambda k: chk.measure(xs[k]))
        t_worst = _golden_max(lambda tau: chk.measure(at(tau)), max(0, jw - 1) * h,
                              min(m, jw + 1) * h)
        if chk.measure(at(t_worst)) < chk.measure(xs[jw]):
            t_worst = jw * h
        cond = chk.condition(x_lo)
        step = self.step_at(ta + max(t_cross, TIME_SLACK * 2))
        self.fail(chk.kind, chk.owner, cond, ta + t_cross, step,
                  f"{chk.kind} {_cmp_text(cond)} of {name_text(chk.owner)} "
                  f"violated at t={ta + t_cross:.6g}",
                  t_worst=ta + t_worst, segment=(ta, tb))

    # -- driver ------------------------------------------------------------------

    def run(self) -> ValidationReport:
        t = 0.0
        self.settle(t)
        self.record(t, self.nums)
        for tg, atoms in self.groups:
            if tg > t + TIME_SLACK:
                self.segment_start = t
                self.segment(t, tg)
                t = tg
            else:
                # a later step at the same time point: a zero-length state
                self.segment_start = tg
            self.apply_group(tg, atoms)
            self.settle(tg)
            self.record(tg, self.nums)
        goal = self.g.goal
        step = self.step_at(t) if self.groups else 0
        if self.plan.timeline:
            step = len(self.plan.timeline) - 1
        self.check_condition(goal, "goal", ("goal",), t, step, self.nums, self.bools)
        return ValidationReport("valid", trace=self.trace)


def simulate(g: GroundInstance, plan: TimedPlan, granularity: float | None = None,
             tol: float = DEFAULT_TOL) -> ValidationReport:
    """
    Replay ``plan`` on ``g`` and report the first violated condition.
    ``granularity`` bounds the length of integration sub-steps (default 0.1).
    """
    sim = _Simulator(g, plan, granularity, tol)
    try:
        return sim.run()
    except _Invalid as exc:
        return exc.report
    except (EvaluationError, ZeroDivisionError, OverflowError) as exc:
        return ValidationReport("invalid", "dynamics", None, None, f"numeric failure: {exc}",
                                trace=sim.trace)


# -- expansion -----------------------------------------------------------------------

HALF = Const(Fraction(1, 2))


def _exact(x: float) -> Fraction:
    return Fraction(f"{x:.9f}")


def _rate_closure(fluents: set, p, active: set) -> set:
    out = set(fluents)
    while True:
        extra = set()
        for n in out:
            for _, src, r in p.continuous.get(n, ()):
                if src in active:
                    extra |= variables(r)
        if extra <= out:
            return out
        out |= extra


def expansion_points(report: ValidationReport) -> list:
    """Offsets into the enclosing state at which the violated condition is re-asserted."""
    pts = [report.offset]
    if report.worst_offset is not None and abs(report.worst_offset - report.offset) > 1e-6:
        pts.append(report.worst_offset)
    return [_exact(x) for x in pts]


def expand(report: ValidationReport, net: ConstraintNetwork, p) -> ConstraintNetwork:
    """
    Extend ``net`` with the value of the violated condition's fluents at the
    reported time points and with the condition itself over those values.

    For every point at offset ``tau`` into the enclosing state ``i`` and every
    fluent ``n`` involved (including fluents the active rates read), a fresh
    variable ``v_at(n, i, tau)`` is tied to ``v_initial(n, i)`` by the active
    continuous effects integrated over ``tau`` with the same rate expressions
    the encoding uses.  Original constraints are kept unchanged.
    """
    if report.valid or report.condition is None or report.step is None:
        raise ValueError("report carries no condition to expand")
    out = net.copy()
    i = report.step
    active = set(report.active)
    cond = report.condition
    for tau in expansion_points(report):
        def key(n, tau=tau):
            return ("v_at", n, i, tau)
        fluents = _rate_closure(cond.variables(), p, active)
        for n in sorted(fluents, key=repr):
            total: Expr = Var(("v_initial", n, i))
            for tag, src, r in p.continuous.get(n, ()):
                if src not in active:
                    continue
                if variables(r):
                    start = map_keys(r, lambda k: ("v_initial", k, i))
                    amount = HALF * (start + map_keys(r, key)) * Const(tau)
                else:
                    amount = r * Const(tau)
                total = BinOp("+" if tag == "incr" else "-", total, amount)
            out.add(Comparison("=", Var(key(n)), total), "expand.value")
        out.add(cond.map(lambda e: map_keys(e, key)), "expand.invariant")
    out.meta["expansions"] = out.meta.get("expansions", 0) + 1
    return out


# -- epsilon separation ------------------------------------------------------------

def _expr_fluents(items) -> set:
    out = set()
    for _, _, e in items:
        out |= variables(e)
    return out


def _footprints(op, kind: str) -> tuple:
    """``(reads, writes)`` of one atomic happening; Boolean atoms and numeric keys mixed."""
    if kind == "action":
        eff = op.effects
        return op.precondition.fluents() | _expr_fluents(eff.numeric), eff.touched()
    rate_writes = {n for _, n, _ in op.rates}
    rate_reads = _expr_fluents(op.rates)
    if kind == "start":
        eff = op.start_effects
        reads = op.at_start.fluents() | op.over_all.fluents() | _expr_fluents(eff.numeric)
        for _, e in op.duration:
            reads |= variables(e)
    else:
        eff = op.end_effects
        reads = op.at_end.fluents() | _expr_fluents(eff.numeric)
    return reads | rate_reads, eff.touched() | rate_writes


def _interfere(a, b) -> bool:
    (ra, wa), (rb, wb) = a, b
    return bool(wa & (rb | wb)) or bool(wb & (ra | wa))


def _atomics(h: Happening, op, shift: float) -> list:
    if isinstance(op, GroundDurativeAction):
        return [(h.time + shift, _footprints(op, "start")),
                (h.end + shift, _footprints(op, "end"))]
    return [(h.time + shift, _footprints(op, "action"))]


def interfering_pairs(plan: TimedPlan, g: GroundInstance) -> list:
    """Pairs ``(t1, t2)`` of times of interfering atomic happenings of distinct triples."""
    atoms = []
    for idx, h in enumerate(plan.happenings):
        op = g.operator(h.name)
        if op is None:
            raise MalformedPlan(f"unknown action {name_text(h.name)}")
        atoms += [(idx, t, fp) for t, fp in _atomics(h, op, 0.0)]
    out = []
    for x in range(len(atoms)):
        for y in range(x + 1, len(atoms)):
            if atoms[x][0] != atoms[y][0] and _interfere(atoms[x][2], atoms[y][2]):
                out.append((atoms[x][1], atoms[y][1]))
    return out


def epsilon_separate(plan: TimedPlan, eps: float, g: GroundInstance,
                     granularity: float | None = None, tol: float = DEFAULT_TOL,
                     max_shifts: int = 10000) -> TimedPlan:
    """
    Shift plan triples forward, in provenance order, until every pair of
    interfering happenings of distinct triples is at least ``eps`` apart.
    Durations are preserved, non-interfering simultaneity is left alone, and
    the result is re-validated; SeparationFailed is raised when no separated
    plan is found or the separated plan is invalid.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")

    def order(h):
        return (h.time, h.step if h.step is not None else -1, name_text(h.name), h.duration)

    placed: list = []  # (time, footprint)
    out = []
    for h in sorted(plan.happenings, key=order):
        op = g.operator(h.name)
        if op is None:
            raise MalformedPlan(f"unknown action {name_text(h.name)}")
        if isinstance(op, GroundDurativeAction) and h.duration < eps and \
                _interfere(_footprints(op, "start"), _footprints(op, "end")):
            raise SeparationFailed(f"{name_text(h.name)} is shorter than eps")
        shift = 0.0
        for _ in range(max_shifts):
            need = 0.0
            for t, fp in _atomics(h, op, shift):
                for pt, pfp in placed:
                    if abs(t - pt) < eps - 1e-12 and _interfere(fp, pfp):
                        need = max(need, pt + eps - t)
            if need <= 0:
                break
            shift += need
        else:
            raise SeparationFailed(f"cannot separate {name_text(h.name)}")
        moved = Happening(h.time + shift, h.name, h.duration, h.step, h.end_step)
        placed += _atomics(moved, op, 0.0)
        out.append(moved)
    result = TimedPlan(tuple(out))
    report = simulate(g, result, granularity, tol)
    if not report.valid:
        raise SeparationFailed(f"separated plan is invalid: {report.description}")
    return result
