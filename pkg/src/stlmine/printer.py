"""Formula pretty-printer; the output re-parses to an equal AST."""
from __future__ import annotations

import math

from stlmine.formula import (
    And, Atom, Eventually, Globally, Implies, Interval, Not, Or, Param, TrueF,
    Until,
)

_PREC = {Implies: 1, Or: 2, And: 3, Until: 4}
_UNARY = 5
_PRIMARY = 6


def fmt_number(v) -> str:
    if isinstance(v, Param):
        return str(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def fmt_interval(iv: Interval) -> str:
    return "{}{},{}{}".format(
        "[" if iv.lo_closed else "(",
        fmt_number(iv.lo),
        fmt_number(iv.hi),
        "]" if iv.hi_closed else ")",
    )


def _prec(phi) -> int:
    if isinstance(phi, (TrueF, Atom)):
        return _PRIMARY
    if isinstance(phi, (Not, Globally, Eventually)):
        return _UNARY
    return _PREC[type(phi)]


def _wrap(text: str, yes: bool) -> str:
    return f"({text})" if yes else text


def to_text(phi) -> str:
    if isinstance(phi, TrueF):
        return "true"
    if isinstance(phi, Atom):
        return f"{phi.signal} {phi.op} {fmt_number(phi.const)}"
    if isinstance(phi, Not):
        bare = isinstance(phi.arg, (TrueF, Not, Globally, Eventually))
        return "!" + _wrap(to_text(phi.arg), not bare)
    if isinstance(phi, (Globally, Eventually)):
        op = "G" if isinstance(phi, Globally) else "F"
        iv = "" if phi.interval.is_unbounded else fmt_interval(phi.interval)
        return f"{op}{iv}({to_text(phi.arg)})"
    p = _prec(phi)
    left, right = _prec(phi.left), _prec(phi.right)
    if isinstance(phi, Implies):
        lp, rp = left <= p, right < p
        sym = "->"
    elif isinstance(phi, Until):
        lp, rp = left <= p, right <= p
        sym = "U" + fmt_interval(phi.interval)
    else:
        lp, rp = left < p, right <= p
        sym = "&&" if isinstance(phi, And) else "||"
    return f"{_wrap(to_text(phi.left), lp)} {sym} {_wrap(to_text(phi.right), rp)}"
