"""PDDL+ frontend: parsing, canonical rendering and grounding."""

from .ast import Domain, Problem
from .errors import (ParseError, PddlError, TypeMismatch, UndeclaredSymbol, UnsupportedEffect,
                     UnsupportedFeature)
from .ground import (GroundAction, GroundCondition, GroundDurativeAction, GroundEffects,
                     GroundEvent, GroundInstance, GroundProcess, MissingInitialValue, ground)
from .parser import parse_domain, parse_problem
from .render import render_domain, render_problem


def load(domain_path, problem_path) -> GroundInstance:
    """Parse and ground a domain/problem file pair."""
    with open(domain_path, encoding="utf-8") as fh:
        dom = parse_domain(fh.read(), source=str(domain_path))
    with open(problem_path, encoding="utf-8") as fh:
        prob = parse_problem(fh.read(), dom, source=str(problem_path))
    return ground(dom, prob)


__all__ = [
    "Domain", "Problem", "ParseError", "PddlError", "TypeMismatch", "UndeclaredSymbol",
    "UnsupportedEffect", "UnsupportedFeature", "GroundAction", "GroundCondition",
    "GroundDurativeAction", "GroundEffects", "GroundEvent", "GroundInstance", "GroundProcess",
    "MissingInitialValue", "ground", "parse_domain", "parse_problem", "render_domain",
    "render_problem", "load",
]
