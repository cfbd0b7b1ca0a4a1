"""
Tokeniser and s-expression reader for PDDL text.

Identifiers are case-folded; ``;`` starts a comment running to end of line.
Every node remembers the line/column where it started.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError


@dataclass
class Atom:
    text: str
    line: int
    col: int

    def __repr__(self):
        return self.text


@dataclass
class SList:
    items: list = field(default_factory=list)
    line: int = 0
    col: int = 0

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def __iter__(self):
        return iter(self.items)

    def head(self) -> str | None:
        if self.items and isinstance(self.items[0], Atom):
            return self.items[0].text
        return None


_DELIMS = set("() \t\r\n;")


def tokenize(text: str, source: str = ""):
    """Yield ``(kind, text, line, col)`` with kind in ``( ) atom``."""
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            yield ch, ch, line, col
            i += 1
            col += 1
            continue
        j = i
        while j < n and text[j] not in _DELIMS:
            j += 1
        yield "atom", text[i:j].lower(), line, col
        col += j - i
        i = j


def read(text: str, source: str = "") -> SList:
    """Read exactly one top-level list from ``text``."""
    stack: list[SList] = []
    result = None
    last = (1, 1)
    for kind, tok, line, col in tokenize(text, source):
        last = (line, col)
        if result is not None:
            raise ParseError("trailing input after top-level form", line, col, source=source)
        if kind == "(":
            stack.append(SList([], line, col))
        elif kind == ")":
            if not stack:
                raise ParseError("unbalanced ')'", line, col, source=source)
            done = stack.pop()
            if stack:
                stack[-1].items.append(done)
            else:
                result = done
        else:
            if not stack:
                raise ParseError(f"unexpected token {tok!r} outside a list", line, col,
                                 expected={"("}, source=source)
            stack[-1].items.append(Atom(tok, line, col))
    if stack:
        raise ParseError("unexpected end of input", *last, expected={")"}, source=source)
    if result is None:
        raise ParseError("empty input", *last, expected={"("}, source=source)
    return result
