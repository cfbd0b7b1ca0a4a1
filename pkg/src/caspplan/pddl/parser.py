"""
Recursive-descent parser for PDDL+ domains and problems.

Supported: typing, Boolean predicates (with ``not``), numeric functions,
instantaneous and durative actions, processes, events, assign/increase/decrease,
rate effects ``(* #t e)`` and duration constraints ``(= ?duration e)``.
``<=``/``>=`` duration constraints are accepted as an extension.
"""

from __future__ import annotations

import logging
from decimal import Decimal, InvalidOperation
from fractions import Fraction

from ..expr import BinOp, Comparison, Const, Expr, UnOp, Var, evaluate, variables
from . import ast
from .errors import ParseError, UndeclaredSymbol, UnsupportedFeature
from .sexpr import Atom, SList, read

log = logging.getLogger(__name__)

KNOWN_REQUIREMENTS = {
    ":strips", ":typing", ":negative-preconditions", ":fluents", ":numeric-fluents",
    ":durative-actions", ":time", ":processes", ":events", ":continuous-effects",
    ":duration-inequalities", ":equality",
}
UNSUPPORTED_HEADS = {
    "or", "imply", "exists", "forall", "when", "preference", "either",
    "scale-up", "scale-down",
}
UNSUPPORTED_SECTIONS = {":derived", ":constraints", ":metric", ":length"}
_COMPARATORS = {"<", "<=", "=", ">=", ">"}


def _number(text: str) -> Fraction | None:
    try:
        return Fraction(Decimal(text))
    except (InvalidOperation, ValueError):
        return None


class _Parser:
    def __init__(self, source: str):
        self.source = source

    # -- helpers ---------------------------------------------------------------

    def err(self, msg, node, expected=()):
        return ParseError(msg, node.line, node.col, expected=expected, source=self.source)

    def unsupported(self, construct, node):
        return UnsupportedFeature(construct, node.line, node.col, source=self.source)

    def undeclared(self, sym, kind, node):
        return UndeclaredSymbol(sym, kind, node.line, node.col, source=self.source)

    def expect_list(self, node, what="list") -> SList:
        if not isinstance(node, SList):
            raise self.err(f"expected {what}", node, expected={"("})
        return node

    def expect_atom(self, node, what="identifier") -> str:
        if not isinstance(node, Atom):
            raise self.err(f"expected {what}", node, expected={what})
        return node.text

    def typed_list(self, items, require_var: bool | None) -> tuple:
        """``a b - t c`` -> ((a, t), (b, t), (c, object))."""
        out, pending = [], []
        i = 0
        while i < len(items):
            node = items[i]
            name = self.expect_atom(node)
            if name == "-":
                if i + 1 >= len(items):
                    raise self.err("missing type after '-'", node, expected={"type"})
                typ = items[i + 1]
                if isinstance(typ, SList):
                    head = typ.head()
                    raise self.unsupported(f"({head} ...) type", typ)
                out.extend((p, typ.text) for p in pending)
                pending = []
                i += 2
                continue
            if require_var is True and not name.startswith("?"):
                raise self.err(f"expected variable, got {name!r}", node, expected={"?var"})
            if require_var is False and name.startswith("?"):
                raise self.err(f"unexpected variable {name!r}", node, expected={"name"})
            pending.append(name)
            i += 1
        out.extend((p, "object") for p in pending)
        return tuple(out)

    # -- domain ----------------------------------------------------------------

    def domain(self, root: SList) -> ast.Domain:
        if root.head() != "define":
            raise self.err("expected (define ...)", root, expected={"define"})
        if len(root) < 2:
            raise self.err("missing domain header", root, expected={"(domain"})
        hdr = self.expect_list(root[1], "(domain name)")
        if hdr.head() != "domain" or len(hdr) != 2:
            raise self.err("expected (domain <name>)", hdr, expected={"domain"})
        name = self.expect_atom(hdr[1])
        fields: dict = {"requirements": (), "types": (), "constants": (),
                        "predicates": (), "functions": ()}
        ops = {"action": [], "durative-action": [], "process": [], "event": []}
        bodies = []
        for sec in root.items[2:]:
            sec = self.expect_list(sec, "domain section")
            head = sec.head()
            if head in UNSUPPORTED_SECTIONS:
                raise self.unsupported(head, sec)
            if head == ":requirements":
                reqs = tuple(self.expect_atom(r) for r in sec.items[1:])
                for r in reqs:
                    if r not in KNOWN_REQUIREMENTS:
                        log.warning("%s:%d:%d: requirement %s ignored",
                                    self.source or "<input>", sec.line, sec.col, r)
                fields["requirements"] = reqs
            elif head == ":types":
                fields["types"] = self.typed_list(sec.items[1:], require_var=False)
            elif head == ":constants":
                fields["constants"] = self.typed_list(sec.items[1:], require_var=False)
            elif head == ":predicates":
                fields["predicates"] = tuple(self.signature(p, ast.PredicateDecl)
                                             for p in sec.items[1:])
            elif head == ":functions":
                fields["functions"] = self.functions(sec.items[1:])
            elif head in (":action", ":durative-action", ":process", ":event"):
                bodies.append((head[1:], sec))
            else:
                raise self.err(f"unknown domain section {head!r}", sec,
                               expected={":requirements", ":types", ":predicates", ":functions",
                                         ":action", ":durative-action", ":process", ":event"})
        self.preds = {p.name: p for p in fields["predicates"]}
        self.funcs = {f.name: f for f in fields["functions"]}
        self.constants = dict(fields["constants"])
        self.types = {t for t, _ in fields["types"]} | {p for _, p in fields["types"]} | {"object"}
        for decl in fields["predicates"] + fields["functions"]:
            for _, t in decl.params:
                if t not in self.types:
                    raise self.undeclared(t, "type", Atom(t, *decl.span))
        for kind, sec in bodies:
            ops[kind].append(self.operator(kind, sec))
        return ast.Domain(
            name=name, actions=tuple(ops["action"]),
            durative_actions=tuple(ops["durative-action"]),
            processes=tuple(ops["process"]), events=tuple(ops["event"]),
            span=(root.line, root.col), **fields)

    def signature(self, node, cls):
        node = self.expect_list(node, "declaration")
        name = self.expect_atom(node[0]) if len(node) else None
        if name is None:
            raise self.err("empty declaration", node, expected={"name"})
        return cls(name, self.typed_list(node.items[1:], require_var=True),
                   span=(node.line, node.col))

    def functions(self, items) -> tuple:
        out = []
        i = 0
        while i < len(items):
            node = items[i]
            if isinstance(node, Atom):
                # "- number" return type annotations
                if node.text == "-" and i + 1 < len(items):
                    if items[i + 1].text not in ("number", "object"):
                        raise self.unsupported(f"function type {items[i + 1].text}", node)
                    i += 2
                    continue
                raise self.err("expected function declaration", node, expected={"("})
            out.append(self.signature(node, ast.FunctionDecl))
            i += 1
        return tuple(out)

    def operator(self, kind: str, sec: SList):
        if len(sec) < 2:
            raise self.err(f"missing {kind} name", sec, expected={"name"})
        name = self.expect_atom(sec[1])
        props: dict = {}
        i = 2
        while i < len(sec):
            key = self.expect_atom(sec[i], "keyword")
            if i + 1 >= len(sec):
                raise self.err(f"missing value for {key}", sec[i], expected={"("})
            props[key] = sec[i + 1]
            i += 2
        allowed = {
            "action": {":parameters", ":precondition", ":effect"},
            "durative-action": {":parameters", ":duration", ":condition", ":effect"},
            "process": {":parameters", ":precondition", ":effect"},
            "event": {":parameters", ":precondition", ":effect"},
        }[kind]
        for key, node in props.items():
            if key not in allowed:
                raise self.err(f"unexpected {key} in {kind}", node, expected=allowed)
        params = ()
        if ":parameters" in props:
            params = self.typed_list(self.expect_list(props[":parameters"]).items, require_var=True)
        for _, t in params:
            if t not in self.types:
                raise self.undeclared(t, "type", props[":parameters"])
        scope = {v for v, _ in params}
        span = (sec.line, sec.col)
        if kind == "durative-action":
            scope_d = scope | {ast.DURATION}
            duration = self.duration(props.get(":duration"), scope)
            starts, alls, ends = self.timed_conditions(props.get(":condition"), scope_d)
            s_eff, e_eff, c_eff = self.timed_effects(props.get(":effect"), scope_d)
            return ast.DurativeActionDecl(name, params, duration, starts, alls, ends,
                                          s_eff, e_eff, c_eff, span=span)
        pre = self.condition(props.get(":precondition"), scope)
        effects = self.effects(props.get(":effect"), scope, allow_rate=(kind == "process"),
                               allow_discrete=(kind != "process"))
        cls = {"action": ast.ActionDecl, "process": ast.ProcessDecl, "event": ast.EventDecl}[kind]
        return cls(name, params, pre, effects, span=span)

    # -- conditions ------------------------------------------------------------

    def _conj(self, node):
        if node is None:
            return []
        node = self.expect_list(node, "condition")
        if node.head() == "and":
            return node.items[1:]
        if len(node) == 0:
            return []
        return [node]

    def condition(self, node, scope) -> tuple:
        out = []
        for item in self._conj(node):
            item = self.expect_list(item, "condition")
            if item.head() == "and":
                out.extend(self.condition(item, scope))
            else:
                out.append(self.cond_item(item, scope))
        return tuple(out)

    def cond_item(self, node: SList, scope):
        head = node.head()
        if head in UNSUPPORTED_HEADS:
            raise self.unsupported(head, node)
        if head == "not":
            if len(node) != 2:
                raise self.err("(not ...) takes one argument", node, expected={"("})
            inner = self.expect_list(node[1], "literal")
            if inner.head() in _COMPARATORS:
                comp = self.comparison(inner, scope)
                return ast.NumCondition(comp.complement(), span=(node.line, node.col))
            lit = self.literal(inner, scope)
            return ast.Literal(lit.predicate, lit.args, False, span=(node.line, node.col))
        if head in _COMPARATORS:
            return ast.NumCondition(self.comparison(node, scope), span=(node.line, node.col))
        return self.literal(node, scope)

    def literal(self, node: SList, scope) -> ast.Literal:
        head = node.head()
        if head is None:
            raise self.err("expected predicate", node, expected={"predicate"})
        if head in UNSUPPORTED_HEADS:
            raise self.unsupported(head, node)
        decl = self.preds.get(head)
        if decl is None:
            raise self.undeclared(head, "predicate", node)
        args = tuple(self.term(a, scope) for a in node.items[1:])
        if len(args) != len(decl.params):
            raise self.err(f"predicate {head} expects {len(decl.params)} arguments, got {len(args)}",
                           node)
        return ast.Literal(head, args, True, span=(node.line, node.col))

    def term(self, node, scope) -> str:
        name = self.expect_atom(node, "term")
        if name.startswith("?"):
            if name not in scope:
                raise self.undeclared(name, "variable", node)
        elif name not in self.constants and name not in self.objects_in_scope():
            raise self.undeclared(name, "constant", node)
        return name

    def objects_in_scope(self):
        return getattr(self, "problem_objects", {})

    def comparison(self, node: SList, scope) -> Comparison:
        if len(node) != 3:
            raise self.err(f"comparison {node.head()} takes two operands", node)
        return Comparison(node.head(), self.expr(node[1], scope), self.expr(node[2], scope))

    def expr(self, node, scope) -> Expr:
        if isinstance(node, Atom):
            txt = node.text
            num = _number(txt)
            if num is not None:
                return Const(num)
            if txt == ast.ELAPSED:
                return Var(ast.ELAPSED)
            if txt == ast.DURATION:
                if ast.DURATION not in scope:
                    raise self.err("?duration outside a durative action", node)
                return Var(ast.DURATION)
            if txt in self.funcs and not self.funcs[txt].params:
                return Var((txt,))
            raise self.err(f"unexpected token {txt!r} in numeric expression", node,
                           expected={"number", "(function ...)", "?duration", "#t"})
        head = node.head()
        if head is None:
            raise self.err("expected numeric expression", node, expected={"("})
        args = node.items[1:]
        if head in ("+", "*"):
            if len(args) < 2:
                raise self.err(f"({head} ...) needs at least two operands", node)
            out = self.expr(args[0], scope)
            for a in args[1:]:
                out = BinOp(head, out, self.expr(a, scope))
            return out
        if head == "-":
            if len(args) == 1:
                return UnOp("neg", self.expr(args[0], scope))
            if len(args) != 2:
                raise self.err("(- ...) takes one or two operands", node)
            return BinOp("-", self.expr(args[0], scope), self.expr(args[1], scope))
        if head == "/":
            if len(args) != 2:
                raise self.err("(/ ...) takes two operands", node)
            return BinOp("/", self.expr(args[0], scope), self.expr(args[1], scope))
        if head in ("^", "pow", "expt"):
            if len(args) != 2:
                raise self.err(f"({head} ...) takes two operands", node)
            return BinOp("^", self.expr(args[0], scope), self.expr(args[1], scope))
        if head == "sqrt":
            if len(args) != 1:
                raise self.err("(sqrt ...) takes one operand", node)
            return UnOp("sqrt", self.expr(args[0], scope))
        return Var(self.fluent(node, scope))

    def fluent(self, node: SList, scope) -> tuple:
        head = node.head()
        decl = self.funcs.get(head)
        if decl is None:
            raise self.undeclared(head or "?", "function", node)
        args = tuple(self.term(a, scope) for a in node.items[1:])
        if len(args) != len(decl.params):
            raise self.err(f"function {head} expects {len(decl.params)} arguments, got {len(args)}",
                           node)
        return (head, *args)

    def duration(self, node, scope) -> tuple:
        if node is None:
            raise self.err("durative action without :duration", Atom("", 0, 0))
        out = []
        for item in self._conj(node):
            item = self.expect_list(item, "duration constraint")
            head = item.head()
            if head not in ("=", "<=", ">=") or len(item) != 3:
                raise self.err("expected (= ?duration expr)", item, expected={"=", "<=", ">="})
            if not (isinstance(item[1], Atom) and item[1].text == ast.DURATION):
                raise self.err("duration constraint must constrain ?duration", item[1],
                               expected={"?duration"})
            if head != "=":
                log.warning("%s:%d:%d: duration inequality accepted as an extension",
                            self.source or "<input>", item.line, item.col)
            e = self.expr(item[2], scope)
            out.append(ast.DurationConstraint(head, e, span=(item.line, item.col)))
        return tuple(out)

    def timed_conditions(self, node, scope):
        starts, alls, ends = [], [], []
        for item in self._conj(node):
            item = self.expect_list(item, "timed condition")
            head = item.head()
            if head == "at" and len(item) == 3 and isinstance(item[1], Atom) \
                    and item[1].text in ("start", "end"):
                target = starts if item[1].text == "start" else ends
            elif head == "over" and len(item) == 3 and isinstance(item[1], Atom) \
                    and item[1].text == "all":
                target = alls
            else:
                raise self.err("expected (at start ...), (over all ...) or (at end ...)", item,
                               expected={"at start", "over all", "at end"})
            target.extend(self.condition(item[2], scope))
        return tuple(starts), tuple(alls), tuple(ends)

    # -- effects ---------------------------------------------------------------

    def effects(self, node, scope, allow_rate: bool, allow_discrete: bool) -> tuple:
        out = []
        for item in self._conj(node):
            item = self.expect_list(item, "effect")
            if item.head() == "and":
                out.extend(self.effects(item, scope, allow_rate, allow_discrete))
                continue
            eff = self.effect(item, scope)
            if isinstance(eff, ast.RateEffect) and not allow_rate:
                raise self.err("continuous effect not allowed here", item)
            if not isinstance(eff, ast.RateEffect) and not allow_discrete:
                raise self.err("processes may only have continuous effects", item,
                               expected={"(increase f (* #t e))"})
            out.append(eff)
        return tuple(out)

    def timed_effects(self, node, scope):
        starts, ends, cont = [], [], []
        for item in self._conj(node):
            item = self.expect_list(item, "effect")
            head = item.head()
            if head == "at" and len(item) == 3 and isinstance(item[1], Atom) \
                    and item[1].text in ("start", "end"):
                target = starts if item[1].text == "start" else ends
                target.extend(self.effects(item[2], scope, allow_rate=False, allow_discrete=True))
            else:
                eff = self.effect(item, scope)
                if not isinstance(eff, ast.RateEffect):
                    raise self.err("untimed discrete effect in durative action", item,
                                   expected={"at start", "at end"})
                cont.append(eff)
        return tuple(starts), tuple(ends), tuple(cont)

    def effect(self, node: SList, scope):
        head = node.head()
        span = (node.line, node.col)
        if head in UNSUPPORTED_HEADS:
            raise self.unsupported(head, node)
        if head == "not":
            lit = self.literal(self.expect_list(node[1], "literal"), scope)
            return ast.BoolEffect(lit.predicate, lit.args, False, span=span)
        if head in ("assign", "increase", "decrease"):
            if len(node) != 3:
                raise self.err(f"({head} f e) takes two operands", node)
            fl = self.fluent(self.expect_list(node[1], "function term"), scope)
            e = self.expr(node[2], scope)
            rate = _rate_of(e)
            if rate is not None:
                if head == "assign":
                    raise self.unsupported("assign with #t", node)
                return ast.RateEffect(head, fl, rate, span=span)
            if ast.ELAPSED in variables(e):
                raise self.unsupported("#t outside (* #t expr)", node)
            return ast.NumEffect(head, fl, e, span=span)
        lit = self.literal(node, scope)
        return ast.BoolEffect(lit.predicate, lit.args, True, span=span)

    # -- problem ---------------------------------------------------------------

    def problem(self, root: SList, domain: ast.Domain) -> ast.Problem:
        self.preds = {p.name: p for p in domain.predicates}
        self.funcs = {f.name: f for f in domain.functions}
        self.constants = dict(domain.constants)
        self.types = ({t for t, _ in domain.types} | {p for _, p in domain.types} | {"object"})
        if root.head() != "define":
            raise self.err("expected (define ...)", root, expected={"define"})
        if len(root) < 2:
            raise self.err("missing problem header", root, expected={"(problem"})
        hdr = self.expect_list(root[1], "(problem name)")
        if hdr.head() != "problem" or len(hdr) != 2:
            raise self.err("expected (problem <name>)", hdr, expected={"problem"})
        name = self.expect_atom(hdr[1])
        dom_name, objects, init_node, goal_node = None, (), None, None
        for sec in root.items[2:]:
            sec = self.expect_list(sec, "problem section")
            head = sec.head()
            if head in UNSUPPORTED_SECTIONS:
                raise self.unsupported(head, sec)
            if head == ":domain":
                dom_name = self.expect_atom(sec[1])
            elif head == ":requirements":
                pass
            elif head == ":objects":
                objects = self.typed_list(sec.items[1:], require_var=False)
            elif head == ":init":
                init_node = sec
            elif head == ":goal":
                goal_node = sec
            else:
                raise self.err(f"unknown problem section {head!r}", sec,
                               expected={":domain", ":objects", ":init", ":goal"})
        if dom_name is None:
            raise self.err("problem without (:domain ...)", root, expected={"(:domain"})
        if dom_name != domain.name:
            raise UndeclaredSymbol(dom_name, "domain", root.line, root.col, source=self.source)
        for obj, t in objects:
            if t not in self.types:
                raise self.undeclared(t, "type", root)
        self.problem_objects = dict(objects)
        facts, values = [], []
        seen_values: dict = {}
        for item in (init_node.items[1:] if init_node else []):
            item = self.expect_list(item, "initial fact")
            head = item.head()
            if head == "at" and len(item) == 3 and _number(getattr(item[1], "text", "")) is not None:
                raise self.unsupported("timed initial literal", item)
            if head == "=":
                if len(item) != 3:
                    raise self.err("(= f value) expected", item)
                fl = self.fluent(self.expect_list(item[1], "function term"), set())
                val = self.expr(item[2], set())
                if variables(val):
                    raise self.err("initial value must be a constant", item[2], expected={"number"})
                v = evaluate(val, {})
                if fl in seen_values:
                    raise self.err(f"duplicate initial value for {fl}", item)
                seen_values[fl] = v
                values.append((fl, v))
            elif head == "not":
                continue
            else:
                facts.append(self.literal(item, set()))
        goal = self.condition(goal_node[1], set()) if goal_node is not None and len(goal_node) > 1 \
            else ()
        return ast.Problem(name, dom_name, objects, tuple(facts), tuple(values), goal,
                           span=(root.line, root.col))


def _rate_of(e: Expr) -> Expr | None:
    """Return ``r`` when ``e`` is ``(* #t r)``/``(* r #t)``/``#t``."""
    if isinstance(e, Var) and e.key == ast.ELAPSED:
        return Const(Fraction(1))
    if isinstance(e, BinOp) and e.op == "*":
        for a, b in ((e.left, e.right), (e.right, e.left)):
            if isinstance(a, Var) and a.key == ast.ELAPSED and ast.ELAPSED not in variables(b):
                return b
    return None


def parse_domain(text: str, source: str = "") -> ast.Domain:
    return _Parser(source).domain(read(text, source))


def parse_problem(text: str, domain: ast.Domain, source: str = "") -> ast.Problem:
    return _Parser(source).problem(read(text, source), domain)
