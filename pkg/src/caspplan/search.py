"""
Chronological enumeration of the Boolean answer sets of an encoded program.

The encoder produces programs in a layered fragment: every atom carries its
step as last argument, rule bodies only look at the same or earlier steps, and
within a step atoms fall into three layers.

* settled atoms, derived from earlier steps without guessing (``holds``, ``ab``);
* guessed atoms, the elements of choice rules whose bodies are settled;
* derived atoms, which depend on guesses of the same step (``ending``, ...).

Default negation inside a step only refers to settled atoms, so each step is
solved by guessing a choice-consistent subset of the active elements and
closing it under the rules.  The layering is checked when the search is set up.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from itertools import combinations

from .encoding.program import CaspProgram, GroundRule, term_text
from .numeric.network import ConstraintNetwork

log = logging.getLogger(__name__)


class LayeringError(ValueError):
    """The program falls outside the step-layered fragment the search handles."""


class SearchTimeout(RuntimeError):
    """The configured deadline passed during enumeration."""


@dataclass(frozen=True)
class SearchConfig:
    horizon: int
    candidate_limit: int = 10**9
    # atoms that must be true in every returned trace (pruning only)
    forced: tuple = ()
    seed: int = 0
    # time.monotonic() value after which enumeration raises SearchTimeout
    deadline: float | None = None

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.candidate_limit < 1:
            raise ValueError("candidate limit must be >= 1")


@dataclass(frozen=True)
class CandidateTrace:
    atoms: frozenset
    horizon: int

    def holds(self, step: int) -> set:
        return {a[1] for a in self.atoms if a[0] == "holds" and a[2] == step}

    def occurrences(self, step: int) -> list:
        return sorted((a[1] for a in self.atoms if a[0] == "occurs" and a[2] == step),
                      key=term_text)

    def must_choices(self, step: int) -> list:
        return sorted((a for a in self.atoms if a[-1] == step
                       and a[0] in ("is_false", "persist")), key=term_text)

    def ab(self, step: int) -> set:
        return {a[1] for a in self.atoms if a[0] == "ab" and a[2] == step}

    def durative_pairs(self) -> list:
        """``(name, start step, end step)`` for every durative occurrence."""
        out = []
        for a in self.atoms:
            if a[0] == "occurs" and isinstance(a[1], tuple) and len(a[1]) == 3 \
                    and a[1][0] == "end" and isinstance(a[1][2], int):
                out.append((a[1][1], a[1][2], a[2]))
        return sorted(out, key=lambda x: (x[1], x[2], term_text(x[0])))

    def summary(self) -> str:
        lines = []
        for i in range(self.horizon + 1):
            occ = " ".join(term_text(o) for o in self.occurrences(i))
            mc = " ".join(term_text(a) for a in self.must_choices(i))
            lines.append(f"{i}: {occ}" + (f" | {mc}" if mc else ""))
        return "\n".join(lines)


def _satisfied(rule: GroundRule, atoms) -> bool:
    return all(a in atoms for a in rule.pos) and not any(a in atoms for a in rule.neg)


class _Index:
    """Per-step views of the ground program."""

    def __init__(self, program: CaspProgram):
        self.horizon = H = program.horizon
        rules = program.ground()
        self.choices = [r for r in rules if r.kind == "choice"]
        self.guess = set()
        for r in self.choices:
            self.guess.update(r.elements)
        normal = [r for r in rules if r.kind in ("rule", "fact")]
        self.denials = [r for r in rules if r.kind == "denial"]
        # post atoms: some rule for them has a same-step guessed or post atom in its body
        post: set = set()
        changed = True
        while changed:
            changed = False
            for r in normal:
                h = r.head
                if h in post:
                    continue
                if any(a[-1] == h[-1] and (a in self.guess or a in post) for a in r.pos + r.neg):
                    post.add(h)
                    changed = True
        self.post = post
        # base atoms are derived from earlier steps only; other settled atoms may
        # negate base atoms, and post atoms may negate any settled atom
        heads = {r.head for r in normal}
        base = set(heads)
        for r in normal:
            if any(a[-1] == r.head[-1] for a in r.pos + r.neg):
                base.discard(r.head)
        self.pre_rules = [[] for _ in range(H + 1)]
        self.post_rules = [[] for _ in range(H + 1)]
        for r in sorted(normal, key=lambda r: r.head not in base):
            h = r.head
            if h in self.guess:
                raise LayeringError(f"{term_text(h)} is both a choice element and a rule head")
            s = h[-1]
            if any(a[-1] > s for a in r.pos + r.neg):
                raise LayeringError(f"rule for {term_text(h)} looks ahead")
            for a in r.neg:
                if a[-1] != s:
                    continue
                # atoms nothing derives are constantly false, hence settled
                underivable = a not in heads and a not in self.guess
                lower = a in base or underivable or (
                    h in post and a not in post and a not in self.guess)
                if not lower or a == h:
                    raise LayeringError(f"same-step negation on unsettled {term_text(a)}")
            (self.post_rules if h in post else self.pre_rules)[s].append(r)
        # choice rules are guessed at the steps of their elements; lower bounds are
        # checked once the last element step (or the body step) is complete
        self.active_at = [[] for _ in range(H + 1)]
        self.check_at = [[] for _ in range(H + 1)]
        for ci, r in enumerate(self.choices):
            body_step = max((a[-1] for a in r.pos + r.neg), default=0)
            unsettled = any(a[-1] == body_step and (a in post or a in self.guess)
                            for a in r.pos + r.neg)
            steps = sorted({e[-1] for e in r.elements})
            if steps and (steps[0] < body_step or (unsettled and steps[0] == body_step)):
                raise LayeringError("choice element is guessed before its body is settled")
            for s in steps:
                self.active_at[s].append(ci)
            self.check_at[max(steps[-1] if steps else 0, body_step)].append(ci)
        self.denials_at = [[] for _ in range(H + 1)]
        for r in self.denials:
            s = max((a[-1] for a in r.pos + r.neg), default=0)
            self.denials_at[min(s, H)].append(r)
        # denials usable to filter single elements before enumeration
        self.element_denials: dict = {}
        for r in self.denials:
            for a in r.pos:
                if a in self.guess:
                    self.element_denials.setdefault(a, []).append(r)

    def settled(self, a, step: int) -> bool:
        return a[-1] < step or (a[-1] == step and a not in self.guess and a not in self.post)


class Search:
    """
    Enumerates candidate traces step by step with backtracking.

    Nogoods (sets of ``(atom, truth)`` literals) may be added while iterating;
    they prune every later branch that makes all their literals true.
    """

    def __init__(self, program: CaspProgram, cfg: SearchConfig):
        if cfg.horizon != program.horizon:
            raise ValueError("search horizon differs from program horizon")
        self.program = program
        self.cfg = cfg
        self.ix = _Index(program)
        self.nogoods: list = []
        self._nogood_set: set = set()
        self.stats = {"nodes": 0, "candidates": 0, "pruned_nogood": 0, "pruned_denial": 0}
        self._gen = self._run()
        self.exhausted = False

    # -- public ----------------------------------------------------------------

    def add_nogood(self, literals) -> None:
        ng = frozenset(literals)
        if ng and ng not in self._nogood_set:
            self._nogood_set.add(ng)
            self.nogoods.append(ng)

    def next(self) -> CandidateTrace | None:
        if self.exhausted or self.stats["candidates"] >= self.cfg.candidate_limit:
            return None
        try:
            t = next(self._gen)
        except StopIteration:
            self.exhausted = True
            return None
        self.stats["candidates"] += 1
        return t

    def __iter__(self):
        while True:
            t = self.next()
            if t is None:
                return
            yield t

    # -- internals ---------------------------------------------------------------

    def _violates_nogood(self, atoms: set, decided) -> bool:
        for ng in self.nogoods:
            ok = True
            for atom, truth in ng:
                if not decided(atom) or (atom in atoms) != truth:
                    ok = False
                    break
            if ok:
                self.stats["pruned_nogood"] += 1
                return True
        return False

    def _closure(self, rules, atoms: set) -> None:
        changed = True
        while changed:
            changed = False
            for r in rules:
                if r.head not in atoms and _satisfied(r, atoms):
                    atoms.add(r.head)
                    changed = True

    def _forced_ok(self, atoms: set, step: int) -> bool:
        return all(a in atoms for a in self.cfg.forced if a[-1] == step)

    def _step_assignments(self, step: int, atoms: set):
        """Yield guess sets for ``step`` in exploration order."""
        ix = self.ix
        active = [ci for ci in ix.active_at[step]
                  if _satisfied(ix.choices[ci], atoms)]
        elements = []
        bounded = set()
        seen = set()
        for ci in active:
            r = ix.choices[ci]
            for e in r.elements:
                if e[-1] != step:
                    continue
                if e not in seen:
                    seen.add(e)
                    elements.append(e)
                if r.lower is not None or r.upper is not None:
                    bounded.add(e)

        def possible(e):
            for d in ix.element_denials.get(e, ()):
                if all(a == e or (ix.settled(a, step) and a in atoms) for a in d.pos) and \
                        all(ix.settled(a, step) and a not in atoms for a in d.neg):
                    return False
            return True

        free = sorted((e for e in elements if e not in bounded and possible(e)), key=term_text)
        bnd = [e for e in elements if e in bounded]
        rules = [ix.choices[ci] for ci in active
                 if ix.choices[ci].lower is not None or ix.choices[ci].upper is not None]
        closing = [ix.choices[ci] for ci in active
                   if ci in ix.check_at[step] and ix.choices[ci].lower is not None]

        def counts_ok(chosen: set, final: bool) -> bool:
            for r in rules:
                n = sum(1 for e in r.elements if e in chosen or (e[-1] < step and e in atoms))
                if r.upper is not None and n > r.upper:
                    return False
            if final:
                for r in closing:
                    n = sum(1 for e in r.elements if e in chosen or (e[-1] < step and e in atoms))
                    if n < r.lower:
                        return False
            return True

        bounded_sets = []

        def rec(i: int, chosen: list):
            if i == len(bnd):
                if counts_ok(set(chosen), True):
                    bounded_sets.append(list(chosen))
                return
            e = bnd[i]
            chosen.append(e)
            if possible(e) and counts_ok(set(chosen), False):
                rec(i + 1, chosen)
            chosen.pop()
            rec(i + 1, chosen)

        rec(0, [])
        # fewer chosen occurrences first, then lexicographic
        bounded_sets.sort(key=lambda s: (sum(1 for a in s if a[0] == "occurs"),
                                         [term_text(a) for a in s]))
        for n in range(len(free) + 1):
            for combo in combinations(free, n):
                for b in bounded_sets:
                    yield list(combo) + b

    def _check_denials(self, step: int, atoms: set) -> bool:
        for d in self.ix.denials_at[step]:
            if _satisfied(d, atoms):
                self.stats["pruned_denial"] += 1
                return False
        return True

    def _lower_bounds_ok(self, step: int, atoms: set) -> bool:
        """Choice rules closing at ``step`` with a satisfied body must meet their lower bound."""
        ix = self.ix
        for ci in ix.check_at[step]:
            r = ix.choices[ci]
            if r.lower is None or not _satisfied(r, atoms):
                continue
            if sum(1 for e in r.elements if e in atoms) < r.lower:
                return False
        return True

    def _run(self):
        yield from self._dfs(0, set())

    def _dfs(self, step: int, base: set):
        ix = self.ix
        H = ix.horizon
        self.stats["nodes"] += 1
        atoms = set(base)
        self._closure(ix.pre_rules[step], atoms)

        if self.nogoods and self._violates_nogood(atoms, lambda a: ix.settled(a, step)):
            return
        deadline = self.cfg.deadline
        for guess in self._step_assignments(step, atoms):
            if deadline is not None and time.monotonic() > deadline:
                raise SearchTimeout("search deadline passed")
            cur = atoms | set(guess)
            self._closure(ix.post_rules[step], cur)
            if not self._check_denials(step, cur):
                continue
            if not self._lower_bounds_ok(step, cur):
                continue
            if not self._forced_ok(cur, step):
                continue
            if self.nogoods and self._violates_nogood(cur, lambda a: a[-1] <= step):
                continue
            if step == H:
                yield CandidateTrace(frozenset(cur), H)
            else:
                yield from self._dfs(step + 1, cur)


def next_candidate(program: CaspProgram, cfg: SearchConfig, cursor: Search | None = None):
    """Return ``(trace, cursor)`` or None when the horizon is exhausted."""
    cursor = cursor or Search(program, cfg)
    t = cursor.next()
    if t is None:
        return None
    return t, cursor


def induced_constraints(t: CandidateTrace, p: CaspProgram) -> ConstraintNetwork:
    """The numeric constraints whose rule bodies the trace satisfies."""
    net = ConstraintNetwork()
    atoms = t.atoms
    for r in p.ground():
        if r.kind != "constraint" or not _satisfied(r, atoms):
            continue
        origin = [(a, True) for a in r.pos] + [(a, False) for a in r.neg]
        net.add(r.head, r.family, origin)
    net.meta["horizon"] = p.horizon
    return net
