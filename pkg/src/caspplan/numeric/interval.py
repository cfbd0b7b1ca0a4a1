"""
Interval arithmetic with outward rounding and HC4-style hull consistency.

Each constraint ``lhs - rhs op 0`` is compiled into a tape (post-order node
list).  A forward sweep computes node enclosures over the current box, the
root is intersected with the admissible range of ``op``, and a backward sweep
projects the narrowed enclosures onto the children down to the variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..expr import BinOp, Const, Expr, UnOp, Var

INF = math.inf


def _down(x: float) -> float:
    return math.nextafter(x, -INF) if math.isfinite(x) else x


def _up(x: float) -> float:
    return math.nextafter(x, INF) if math.isfinite(x) else x


def _lo_of(v) -> float:
    f = float(v)
    if isinstance(v, Fraction) and Fraction(f) > v:
        return _down(f)
    return f


def _hi_of(v) -> float:
    f = float(v)
    if isinstance(v, Fraction) and Fraction(f) < v:
        return _up(f)
    return f


def inter(a, b):
    if a is None or b is None:
        return None
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    if lo > hi:
        return None
    return (lo, hi)


def add(a, b):
    return (_down(a[0] + b[0]), _up(a[1] + b[1]))


def sub(a, b):
    return (_down(a[0] - b[1]), _up(a[1] - b[0]))


def _mulf(x, y):
    if x == 0 or y == 0:
        return 0.0
    return x * y


def mul(a, b):
    ps = (_mulf(a[0], b[0]), _mulf(a[0], b[1]), _mulf(a[1], b[0]), _mulf(a[1], b[1]))
    return (_down(min(ps)), _up(max(ps)))


def _q(x: float, y: float) -> float:
    if math.isinf(y):
        return 0.0
    return x / y


def div(a, b):
    """Enclosure of a/b; None if b is exactly zero, the whole line if b straddles zero."""
    if b[0] == 0 and b[1] == 0:
        return None
    if b[0] > 0 or b[1] < 0:
        return mul(a, (_down(_q(1.0, b[1])), _up(_q(1.0, b[0]))))
    if b[0] == 0:
        if a[0] > 0:
            return (_down(_q(a[0], b[1])), INF)
        if a[1] < 0:
            return (-INF, _up(_q(a[1], b[1])))
    elif b[1] == 0:
        if a[0] > 0:
            return (-INF, _up(_q(a[0], b[0])))
        if a[1] < 0:
            return (_down(_q(a[1], b[0])), INF)
    return (-INF, INF)


def neg(a):
    return (-a[1], -a[0])


def sqrt_(a):
    a = inter(a, (0.0, INF))
    if a is None:
        return None
    return (_down(math.sqrt(a[0])), _up(math.sqrt(a[1])) if a[1] != INF else INF)


def sqr_inv(z, x):
    """Project z = x**2 back onto x."""
    z = inter(z, (0.0, INF))
    if z is None:
        return None
    r = (_down(math.sqrt(z[0])), _up(math.sqrt(z[1])) if z[1] != INF else INF)
    pos = inter(x, r)
    negp = inter(x, (-r[1], -r[0]))
    if pos is None:
        return negp
    if negp is None:
        return pos
    return (min(pos[0], negp[0]), max(pos[1], negp[1]))


def _powf(x: float, n: float) -> float:
    try:
        return math.pow(x, n)
    except OverflowError:
        return INF if x > 0 or n % 2 == 0 else -INF


def pow_(a, n: float):
    if float(n).is_integer():
        n = int(n)
        if n == 0:
            return (1.0, 1.0)
        if n < 0:
            return div((1.0, 1.0), pow_(a, -n))
        if n % 2 == 1:
            return (_down(_powf(a[0], n)), _up(_powf(a[1], n)))
        lo = 0.0 if a[0] <= 0 <= a[1] else min(abs(a[0]), abs(a[1]))
        hi = max(abs(a[0]), abs(a[1]))
        return (_down(_powf(lo, n)), _up(_powf(hi, n)))
    a = inter(a, (0.0, INF))
    if a is None:
        return None
    if n > 0:
        return (_down(_powf(a[0], n)), _up(_powf(a[1], n)))
    return (_down(_powf(a[1], n)) if a[1] else 0.0, _up(_powf(a[0], n)) if a[0] else INF)


# -- tapes -----------------------------------------------------------------------

@dataclass
class Tape:
    ops: list  # (op, arg0, arg1) with args = node indices, var index or constant
    root: int
    op: str  # comparison against zero


def compile_tape(e: Expr, op: str, index: dict) -> Tape:
    ops: list = []

    def rec(n) -> int:
        if isinstance(n, Const):
            ops.append(("const", (_lo_of(n.value), _hi_of(n.value)), None))
        elif isinstance(n, Var):
            ops.append(("var", index[n.key], None))
        elif isinstance(n, UnOp):
            a = rec(n.arg)
            ops.append((n.op, a, None))
        elif isinstance(n, BinOp):
            if n.op == "^" and isinstance(n.right, Const):
                a = rec(n.left)
                ops.append(("powc", a, float(n.right.value)))
            else:
                a = rec(n.left)
                b = rec(n.right)
                ops.append((n.op, a, b))
        else:
            raise TypeError(f"unexpected node {n!r}")
        return len(ops) - 1

    root = rec(e)
    return Tape(ops, root, op)


def forward(t: Tape, box: list):
    vals = [None] * len(t.ops)
    for i, (op, a, b) in enumerate(t.ops):
        if op == "const":
            v = a
        elif op == "var":
            v = box[a]
        elif op == "+":
            v = add(vals[a], vals[b])
        elif op == "-":
            v = sub(vals[a], vals[b])
        elif op == "*":
            v = mul(vals[a], vals[b])
        elif op == "/":
            v = div(vals[a], vals[b])
        elif op == "neg":
            v = neg(vals[a])
        elif op == "sqrt":
            v = sqrt_(vals[a])
        elif op == "powc":
            v = pow_(vals[a], b)
        elif op == "^":
            v = (-INF, INF)
        else:
            raise ValueError(op)
        if v is None:
            return None
        vals[i] = v
    return vals


ROOT_RANGE = {"<=": (-INF, 0.0), "<": (-INF, 0.0), "=": (0.0, 0.0), ">=": (0.0, INF),
              ">": (0.0, INF), "!=": (-INF, INF)}


def backward(t: Tape, vals: list, box: list) -> bool:
    """Narrow ``box`` in place; False when it becomes empty."""
    root = inter(vals[t.root], ROOT_RANGE[t.op])
    if root is None:
        return False
    vals[t.root] = root
    for i in range(len(t.ops) - 1, -1, -1):
        op, a, b = t.ops[i]
        z = vals[i]
        if op == "const":
            if inter(z, a) is None:
                return False
            continue
        if op == "var":
            nb = inter(box[a], z)
            if nb is None:
                return False
            box[a] = nb
            continue
        if op == "+":
            na, nb = inter(vals[a], sub(z, vals[b])), None
            if na is None:
                return False
            nb = inter(vals[b], sub(z, na))
            vals[a], vals[b] = na, nb
        elif op == "-":
            na = inter(vals[a], add(z, vals[b]))
            if na is None:
                return False
            nb = inter(vals[b], sub(na, z))
            vals[a], vals[b] = na, nb
        elif op == "*":
            x, y = vals[a], vals[b]
            if not (y[0] <= 0 <= y[1]):
                x = inter(x, div(z, y))
                if x is None:
                    return False
            if not (x[0] <= 0 <= x[1]):
                y = inter(y, div(z, x))
            vals[a], vals[b] = x, y
            nb = y
        elif op == "/":
            x, y = vals[a], vals[b]
            x = inter(x, mul(z, y))
            if x is None:
                return False
            if not (z[0] <= 0 <= z[1]):
                q = div(x, z)
                y = inter(y, q) if q is not None else y
            vals[a], vals[b] = x, y
            nb = y
        elif op == "neg":
            nb = inter(vals[a], neg(z))
            vals[a] = nb
        elif op == "sqrt":
            z = inter(z, (0.0, INF))
            if z is None:
                return False
            sq = (_down(z[0] * z[0]), _up(z[1] * z[1]))
            nb = inter(vals[a], sq)
            vals[a] = nb
        elif op == "powc":
            n = b
            x = vals[a]
            if n == 2:
                nb = sqr_inv(z, x)
            elif float(n).is_integer() and int(n) % 2 == 1 and n > 0:
                k = int(n)
                root_ = (-_powf(-z[0], 1 / k) if z[0] < 0 else _powf(z[0], 1 / k),
                         -_powf(-z[1], 1 / k) if z[1] < 0 else _powf(z[1], 1 / k))
                nb = inter(x, (_down(root_[0]), _up(root_[1])))
            else:
                nb = x
            vals[a] = nb
        else:
            nb = vals[a]
        if nb is None:
            return False
    return True


def hc4(tapes: list, box: list, max_rounds: int = 30, min_gain: float = 0.01) -> bool:
    """Propagate all tapes to an approximate fixpoint; False if the box is empty."""
    for _ in range(max_rounds):
        before = [b[1] - b[0] for b in box]
        for t in tapes:
            vals = forward(t, box)
            if vals is None:
                return False
            if not backward(t, vals, box):
                return False
        gain = 0.0
        for w0, b in zip(before, box):
            w1 = b[1] - b[0]
            if w0 > 0 and math.isfinite(w0):
                gain = max(gain, (w0 - w1) / w0)
            elif not math.isfinite(w0) and math.isfinite(w1):
                gain = 1.0
        if gain < min_gain:
            break
    return True


def evaluate_tape(t: Tape, x) -> float:
    vals = [0.0] * len(t.ops)
    for i, (op, a, b) in enumerate(t.ops):
        if op == "const":
            v = (a[0] + a[1]) / 2
        elif op == "var":
            v = x[a]
        elif op == "+":
            v = vals[a] + vals[b]
        elif op == "-":
            v = vals[a] - vals[b]
        elif op == "*":
            v = vals[a] * vals[b]
        elif op == "/":
            v = vals[a] / vals[b] if vals[b] != 0 else math.copysign(1e300, vals[a] or 1.0)
        elif op == "neg":
            v = -vals[a]
        elif op == "sqrt":
            v = math.sqrt(vals[a]) if vals[a] > 0 else 0.0
        elif op == "powc":
            v = _powf(vals[a], b) if vals[a] > 0 or float(b).is_integer() else 0.0
        else:
            v = _powf(vals[a], vals[b]) if vals[a] > 0 else 0.0
        vals[i] = v
    return vals[t.root]
