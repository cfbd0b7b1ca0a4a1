"""PDDL+ planning through a constraint answer set encoding."""

__version__ = "0.1.0"
