"""
Compilation of a ground PDDL+ instance into CASP rule schemas.

Timeline: states 0..H with real variables ``tstart(i) <= tend(i)`` and
``tstart(i+1) = tend(i)``.  Happenings chosen at step i (i < H) take place at
``tend(i)``; they read the values ``v_final(., i)`` and their effects become
visible in state i+1.  Continuous change of state i turns ``v_initial(., i)``
into ``v_final(., i)``.  The initial state and the last state have zero length.

Atoms used (last argument is the step):

``holds(f, i)``        Boolean fluent f, including ``inprogr(op)`` markers
``occurs(h, i)``       happening h: an action name, ``start(d)``, ``end(d, j)``
                       (the end of the copy of d started at step j), ``start(p)``
                       and ``end(p)`` for processes, or an event name
``ending(d, i)``       some copy of durative action d ends at step i
``is_false(c, i)``     numeric condition c is false at the end of state i
``persist(p, i)``      process p keeps running past step i
``ab(n, i)``           numeric fluent n changes continuously in state i
``assigned(n, i)``     numeric fluent n is assigned at step i
"""

from __future__ import annotations

from fractions import Fraction

from ..expr import BinOp, Comparison, Const, Expr, Var, fold_constants, map_keys, variables
from ..pddl.errors import UnsupportedEffect
from ..pddl.ground import GroundInstance
from .program import CaspProgram, Rule, StepVar

I = StepVar("I")
J = StepVar("J")
K = StepVar("K")
STATE = (("I", "state"),)
OCC = (("I", "occ"),)

HALF = Const(Fraction(1, 2))


def inprogr(name: tuple) -> tuple:
    return ("inprogr", name)


def holds(f, s) -> tuple:
    return ("holds", f, s)


def occurs(h, s) -> tuple:
    return ("occurs", h, s)


def tstart(s) -> Var:
    return Var(("tstart", s))


def tend(s) -> Var:
    return Var(("tend", s))


def v_initial(n, s) -> Var:
    return Var(("v_initial", n, s))


def v_final(n, s) -> Var:
    return Var(("v_final", n, s))


def contrib_key(n, tag, src, s) -> tuple:
    return ("v", ("contrib", n, tag, src), s)


def jump_key(n, tag, src, s) -> tuple:
    return ("v", ("jump", n, tag, src), s)


def at(e: Expr, which: str, s) -> Expr:
    """Read fluent keys of ``e`` as ``v_initial``/``v_final`` at step ``s``."""
    return map_keys(e, lambda k: (which, k, s))


def at_cmp(c: Comparison, which: str, s) -> Comparison:
    return c.map(lambda e: at(e, which, s))


def _eq(a: Expr, b: Expr) -> Comparison:
    return Comparison("=", a, b)


class _Encoder:
    def __init__(self, g: GroundInstance, horizon: int):
        if horizon < 0:
            raise ValueError("horizon must be >= 0")
        self.g = g
        self.p = CaspProgram(horizon, instance=g)
        self.numeric = set(g.numeric_fluents)
        self.bool_fluents = set(g.boolean_fluents)
        # discrete effect sources: (source key, body atom schema, effects)
        self.sources = []
        for a in g.actions:
            self.sources.append((a.name, occurs(a.name, I), a.effects))
            self.p.happenings[a.name] = ("action", a.name)
        for d in g.durative_actions:
            self.sources.append((("start", d.name), occurs(("start", d.name), I), d.start_effects))
            self.sources.append((("end", d.name), ("ending", d.name, I), d.end_effects))
            self.p.happenings[("start", d.name)] = ("start", d.name)
            self.p.happenings[("end", d.name)] = ("end", d.name)
        for e in g.events:
            self.sources.append((e.name, occurs(e.name, I), e.effects))
            self.p.happenings[e.name] = ("event", e.name)
        for pr in g.processes:
            self.p.happenings[("start", pr.name)] = ("process-start", pr.name)
            self.p.happenings[("end", pr.name)] = ("process-end", pr.name)
        self.rate_sources = [(d.name, d.rates) for d in g.durative_actions]
        self.rate_sources += [(pr.name, pr.rates) for pr in g.processes]

    def add(self, kind, family, head=None, **kw):
        self.p.add(Rule(kind, family, head, **kw))

    def check_fluents(self, e: Expr, where: str):
        for k in variables(e):
            if k not in self.numeric:
                raise UnsupportedEffect(f"{where}: {k!r} is not a numeric fluent")

    # -- families ------------------------------------------------------------

    def timeline(self):
        p = self.p
        p.register("tstart", ("tstart", I))
        p.register("tend", ("tend", I))
        self.add("constraint", "timeline.order", Comparison(">=", tend(I), tstart(I)), domain=STATE)
        self.add("constraint", "timeline.origin", _eq(tstart(0), Const(Fraction(0))))
        self.add("constraint", "timeline.initial", _eq(tend(0), tstart(0)))
        H = p.horizon
        self.add("constraint", "timeline.final", _eq(tend(H), tstart(H)))
        self.add("constraint", "timeline.gap", _eq(tstart(I + 1), tend(I)), domain=OCC)

    def initial_state(self):
        for f in sorted(self.g.init_true):
            self.add("fact", "init.holds", holds(f, 0))
        for n in self.g.numeric_fluents:
            self.p.register("v_initial", ("v_initial", n, I))
            self.p.register("v_final", ("v_final", n, I))
        for n in self.g.numeric_fluents:
            self.add("constraint", "init.value",
                     _eq(v_initial(n, 0), Const(Fraction(self.g.init_values[n]))))

    def boolean_body(self, cond, s):
        pos, neg = [], []
        for atom, positive in cond.literals:
            (pos if positive else neg).append(holds(atom, s))
        return pos, neg

    def denials(self, family, trigger_pos, trigger_neg, cond, domain, guards=(), s=I):
        for atom, positive in cond.literals:
            lit = holds(atom, s)
            if positive:
                self.add("denial", family, pos=tuple(trigger_pos), neg=tuple(trigger_neg) + (lit,),
                         domain=domain, guards=guards)
            else:
                self.add("denial", family, pos=tuple(trigger_pos) + (lit,), neg=tuple(trigger_neg),
                         domain=domain, guards=guards)

    def numeric_conditions(self, family, cond, which, s, pos=(), neg=(), domain=OCC, guards=()):
        for c in cond.numeric:
            self.check_fluents(c.lhs, family)
            self.check_fluents(c.rhs, family)
            self.add("constraint", family, at_cmp(c, which, s), pos=tuple(pos), neg=tuple(neg),
                     domain=domain, guards=guards)

    def actions(self):
        for a in self.g.actions:
            trig = occurs(a.name, I)
            self.denials("action.pre", [trig], [], a.precondition, OCC)
            self.numeric_conditions("action.pre_num", a.precondition, "v_final", I, pos=[trig])

    def durative(self):
        for d in self.g.durative_actions:
            st, ip = occurs(("start", d.name), I), holds(inprogr(d.name), I)
            ending = ("ending", d.name, I)
            self.add("denial", "durative.no_overlap", pos=(st, ip), domain=OCC)
            self.denials("durative.start_pre", [st], [], d.at_start, OCC)
            self.numeric_conditions("durative.start_num", d.at_start, "v_final", I, pos=[st])
            self.denials("durative.end_pre", [ending], [], d.at_end, OCC)
            self.numeric_conditions("durative.end_num", d.at_end, "v_final", I, pos=[ending])
            self.denials("durative.over_all", [ip], [], d.over_all, STATE)
            self.numeric_conditions("durative.over_all_num", d.over_all, "v_initial", I,
                                    pos=[ip], domain=STATE)
            self.numeric_conditions("durative.over_all_num", d.over_all, "v_final", I,
                                    pos=[ip], domain=STATE)
            self.add("rule", "durative.inprogr_start", holds(inprogr(d.name), I + 1), pos=(st,),
                     domain=OCC)
            self.add("rule", "durative.inprogr_persist", holds(inprogr(d.name), I + 1),
                     pos=(ip,), neg=(ending,), domain=OCC)
            # stime(d, J) = tend(J) when a copy starts at J
            self.p.register("stime", ("stime", d.name, I), "occ")
            self.add("constraint", "durative.stime", _eq(Var(("stime", d.name, I)), tend(I)),
                     pos=(st,), domain=OCC)
            end_jk = occurs(("end", d.name, J), K)
            self.add("choice", "durative.end_trigger", elements=(end_jk,), lower=1, upper=1,
                     pos=(occurs(("start", d.name), J),), domain=(("J", "occ"),),
                     elem_domain=(("K", "occ"),), guards=(("J", "K"),))
            self.add("rule", "durative.ending", ("ending", d.name, K), pos=(end_jk,),
                     domain=(("J", "occ"), ("K", "occ")), guards=(("J", "K"),))
            self.add("denial", "durative.end_in_progress", pos=(end_jk,),
                     neg=(holds(inprogr(d.name), K),),
                     domain=(("J", "occ"), ("K", "occ")), guards=(("J", "K"),))
            for op, e in d.duration:
                self.check_fluents(e, "duration")
                self.add("constraint", "durative.duration",
                         Comparison(op, tend(K) - Var(("stime", d.name, J)), at(e, "v_final", J)),
                         pos=(end_jk,), domain=(("J", "occ"), ("K", "occ")),
                         guards=(("J", "K"),))

    def processes(self):
        for pr in self.g.processes:
            ip = holds(inprogr(pr.name), I)
            pos, neg = self.boolean_body(pr.precondition, I)
            start, end = ("start", pr.name), ("end", pr.name)
            falses = tuple(("is_false", c, I) for c in pr.precondition.numeric)
            self.add("choice", "process.must_start", elements=(occurs(start, I),) + falses,
                     lower=1, upper=1, pos=tuple(pos), neg=tuple(neg) + (ip,), domain=OCC)
            persist = ("persist", pr.name, I)
            self.add("choice", "process.must_persist", elements=(persist,) + falses,
                     lower=1, upper=1, pos=tuple(pos) + (ip,), neg=tuple(neg), domain=OCC)
            for f in falses:
                self.add("rule", "process.end", occurs(end, I), pos=(ip, f), domain=OCC)
            for atom, positive in pr.precondition.literals:
                lit = holds(atom, I)
                self.add("rule", "process.end_bool", occurs(end, I),
                         pos=(ip,) if positive else (ip, lit), neg=(lit,) if positive else (),
                         domain=OCC)
                # the fluent flipped at the previous happening: the process stopped there
                self.add("constraint", "process.end_bool_instant", _eq(tend(I), tstart(I)),
                         pos=(ip,) if positive else (ip, lit), neg=(lit,) if positive else (),
                         domain=OCC)
            self.add("rule", "process.inprogr_start", holds(inprogr(pr.name), I + 1),
                     pos=(occurs(start, I),), domain=OCC)
            self.add("rule", "process.inprogr_persist", holds(inprogr(pr.name), I + 1),
                     pos=(ip,), neg=(occurs(end, I),), domain=OCC)
            for c, f in zip(pr.precondition.numeric, falses):
                self.check_fluents(c.lhs, "process")
                self.check_fluents(c.rhs, "process")
                for trig in (occurs(start, I), persist):
                    self.add("constraint", "process.condition", at_cmp(c, "v_final", I),
                             pos=(trig,), domain=OCC)
                self.add("constraint", "process.is_false", at_cmp(c.complement(), "v_final", I),
                         pos=(f,), domain=OCC)

    def events(self):
        for ev in self.g.events:
            pos, neg = self.boolean_body(ev.precondition, I)
            falses = tuple(("is_false", c, I) for c in ev.precondition.numeric)
            self.add("choice", "event.must_fire", elements=(occurs(ev.name, I),) + falses,
                     lower=1, upper=1, pos=tuple(pos), neg=tuple(neg), domain=OCC)
            self.numeric_conditions("event.condition", ev.precondition, "v_final", I,
                                    pos=[occurs(ev.name, I)])
            for c, f in zip(ev.precondition.numeric, falses):
                self.add("constraint", "event.is_false", at_cmp(c.complement(), "v_final", I),
                         pos=(f,), domain=OCC)

    def boolean_effects(self):
        deleters: dict = {}
        for _, body, eff in self.sources:
            for f in eff.add:
                self.add("rule", "effect.add", holds(f, I + 1), pos=(body,), domain=OCC)
            for f in eff.delete:
                deleters.setdefault(f, []).append(body)
        for f in self.g.boolean_fluents:
            self.add("rule", "inertia.bool", holds(f, I + 1), pos=(holds(f, I),),
                     neg=tuple(deleters.get(f, ())), domain=OCC)
        for i, (_, b1, e1) in enumerate(self.sources):
            for j, (_, b2, e2) in enumerate(self.sources):
                if i != j and set(e1.add) & set(e2.delete):
                    self.add("denial", "mutex.bool", pos=(b1, b2), domain=OCC)

    def numeric_effects(self):
        jumps: dict = {}
        assigns: dict = {}
        for src, body, eff in self.sources:
            for kind, n, e in eff.numeric:
                if n not in self.numeric:
                    raise UnsupportedEffect(f"effect on unknown numeric fluent {n!r}")
                self.check_fluents(e, "effect")
                if kind == "assign":
                    assigns.setdefault(n, []).append((src, body, e))
                elif kind in ("increase", "decrease"):
                    tag = "incr" if kind == "increase" else "decr"
                    jumps.setdefault(n, []).append((tag, src, body, e))
                else:
                    raise UnsupportedEffect(f"unsupported discrete effect {kind}")
        for n in self.g.numeric_fluents:
            total: Expr = v_final(n, I)
            for tag, src, body, e in jumps.get(n, ()):
                key = jump_key(n, tag, src, I)
                self.p.register("jump", jump_key(n, tag, src, I), "occ")
                self.add("constraint", "jump.value", _eq(Var(key), at(e, "v_final", I)),
                         pos=(body,), domain=OCC)
                self.add("constraint", "jump.zero", _eq(Var(key), Const(Fraction(0))),
                         neg=(body,), domain=OCC)
                total = BinOp("+" if tag == "incr" else "-", total, Var(key))
            neg = (("assigned", n, I),) if n in assigns else ()
            self.add("constraint", "propagation", _eq(v_initial(n, I + 1), total), neg=neg,
                     domain=OCC)
            for src, body, e in assigns.get(n, ()):
                self.add("constraint", "effect.assign", _eq(v_initial(n, I + 1), at(e, "v_final", I)),
                         pos=(body,), domain=OCC)
                self.add("rule", "assigned", ("assigned", n, I), pos=(body,), domain=OCC)

    def continuous(self):
        per_fluent: dict = {}
        for src, rates in self.rate_sources:
            for kind, n, r in rates:
                if n not in self.numeric:
                    raise UnsupportedEffect(f"continuous effect on unknown fluent {n!r}")
                if kind not in ("increase", "decrease"):
                    raise UnsupportedEffect(f"unsupported continuous effect {kind}")
                self.check_fluents(r, "rate")
                tag = "incr" if kind == "increase" else "decr"
                per_fluent.setdefault(n, []).append((tag, src, r))
        for n in self.g.numeric_fluents:
            sources = per_fluent.get(n, [])
            if sources:
                self.p.continuous[n] = list(sources)
            total: Expr = v_initial(n, I)
            for tag, src, r in sources:
                key = contrib_key(n, tag, src, I)
                active = holds(inprogr(src), I)
                self.p.register("contrib", key)
                elapsed = tend(I) - tstart(I)
                if variables(r):
                    amount = HALF * (at(r, "v_initial", I) + at(r, "v_final", I)) * elapsed
                else:
                    amount = fold_constants(r * elapsed)
                    if r.value >= 0:
                        self.add("constraint", "contrib.nonneg",
                                 Comparison(">=", Var(key), Const(Fraction(0))), domain=STATE)
                self.add("constraint", "contrib.value", _eq(Var(key), amount), pos=(active,),
                         domain=STATE)
                self.add("constraint", "contrib.zero", _eq(Var(key), Const(Fraction(0))),
                         neg=(active,), domain=STATE)
                self.add("rule", "ab", ("ab", n, I), pos=(active,), domain=STATE)
                total = BinOp("+" if tag == "incr" else "-", total, Var(key))
            if sources:
                self.add("constraint", "balance", _eq(v_final(n, I), total), domain=STATE)
            self.add("constraint", "inertia.num", _eq(v_final(n, I), v_initial(n, I)),
                     neg=(("ab", n, I),) if sources else (), domain=STATE)

    def goal(self):
        H = self.p.horizon
        for atom, positive in self.g.goal.literals:
            lit = holds(atom, H)
            if positive:
                self.add("denial", "goal", neg=(lit,))
            else:
                self.add("denial", "goal", pos=(lit,))
        for c in self.g.goal.numeric:
            self.check_fluents(c.lhs, "goal")
            self.check_fluents(c.rhs, "goal")
            self.add("constraint", "goal.num", at_cmp(c, "v_final", H))

    def run(self) -> CaspProgram:
        self.timeline()
        self.initial_state()
        self.actions()
        self.durative()
        self.processes()
        self.events()
        self.boolean_effects()
        self.numeric_effects()
        self.continuous()
        self.goal()
        return self.p


def encode_instance(g: GroundInstance, horizon: int) -> CaspProgram:
    """The rule families describing bounded executions of ``g`` over ``horizon`` steps."""
    return _Encoder(g, horizon).run()


def encode_planning_module(g: GroundInstance, horizon: int) -> CaspProgram:
    """The unconstrained choice of actions and durative starts at every step."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    p = CaspProgram(horizon, instance=g)
    elems = tuple(occurs(a.name, I) for a in g.actions)
    elems += tuple(occurs(("start", d.name), I) for d in g.durative_actions)
    if elems:
        p.add(Rule("choice", "planning", elements=elems, domain=OCC))
    for a in g.actions:
        p.happenings[a.name] = ("action", a.name)
    for d in g.durative_actions:
        p.happenings[("start", d.name)] = ("start", d.name)
        p.happenings[("end", d.name)] = ("end", d.name)
    return p


def encode(g: GroundInstance, horizon: int) -> CaspProgram:
    return encode_instance(g, horizon) | encode_planning_module(g, horizon)
