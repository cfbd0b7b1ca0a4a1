"""Diagnostics raised by the PDDL+ frontend."""

from __future__ import annotations


class PddlError(Exception):
    """Base class; carries an optional source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = ""):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.source = source

    def __str__(self):
        where = self.source or "<input>"
        if self.line:
            return f"{where}:{self.line}:{self.col}: {self.message}"
        return f"{where}: {self.message}"


class ParseError(PddlError):
    def __init__(self, message, line=0, col=0, expected=(), source=""):
        if expected:
            message = f"{message} (expected {' | '.join(sorted(expected))})"
        super().__init__(message, line, col, source)
        self.expected = frozenset(expected)


class UnsupportedFeature(PddlError):
    def __init__(self, construct: str, line=0, col=0, source=""):
        super().__init__(f"unsupported construct {construct}", line, col, source)
        self.construct = construct


class UndeclaredSymbol(PddlError):
    def __init__(self, symbol: str, kind: str, line=0, col=0, source=""):
        super().__init__(f"undeclared {kind} {symbol!r}", line, col, source)
        self.symbol = symbol
        self.kind = kind


class TypeMismatch(PddlError):
    pass


class UnsupportedEffect(PddlError):
    pass
