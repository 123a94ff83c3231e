"""Systematic enumeration of PSTL templates by increasing length.

Templates are built bottom-up from parameterised atoms: every length-``L``
candidate applies one operator to stored templates whose lengths sum to
``L - 1``. Candidates are canonicalised and skipped when they collapse to
an already-emitted template (equality up to parameter renaming).
"""
from __future__ import annotations

import logging
from dataclasses import replace
from typing import Iterator, Sequence

from stlmine.formula import (
    And, Atom, Eventually, Formula, Globally, Implies, Interval, Not, Or, Param,
    TEMPORAL, Until, length, map_children, negate_atom, walk,
)
from stlmine.pstl import ParametricFormula

log = logging.getLogger(__name__)

OPERATOR_ORDER = ("not", "G", "F", "and", "or", "implies", "U")
DEFAULT_OPERATORS = ("not", "G", "F", "and", "or", "implies")
_UNARY = {"not": Not, "G": Globally, "F": Eventually}
_BINARY = {"and": And, "or": Or, "implies": Implies, "U": Until}


def _rename(phi: Formula, fn) -> Formula:
    """Apply ``fn`` to every Param occurring in ``phi``."""
    if isinstance(phi, Atom):
        if isinstance(phi.const, Param):
            return Atom(phi.signal, phi.op, fn(phi.const))
        return phi
    out = map_children(phi, lambda c: _rename(c, fn))
    if isinstance(phi, TEMPORAL):
        iv = phi.interval
        lo = fn(iv.lo) if isinstance(iv.lo, Param) else iv.lo
        hi = fn(iv.hi) if isinstance(iv.hi, Param) else iv.hi
        out = replace(out, interval=Interval(lo, hi, iv.lo_closed, iv.hi_closed))
    return out


def erase(phi: Formula) -> str:
    """Printed form with every parameter name blanked out."""
    return str(_rename(phi, lambda p: Param("")))


def fresh_names(phi: Formula) -> Formula:
    """Rename parameters in order of appearance: p1, p2, ... for values, t1, ... for times."""
    mapping: dict[str, Param] = {}
    counters = {"p": 0, "t": 0}
    kinds = {}
    for node in walk(phi):
        if isinstance(node, Atom) and isinstance(node.const, Param):
            kinds.setdefault(node.const.name, "p")
        elif isinstance(node, TEMPORAL):
            for end in (node.interval.lo, node.interval.hi):
                if isinstance(end, Param):
                    kinds.setdefault(end.name, "t")
    for name, kind in kinds.items():
        counters[kind] += 1
        mapping[name] = Param(f"{kind}{counters[kind]}")
    return _rename(phi, lambda p: mapping[p.name])


def canonicalize(psi) -> Formula | None:
    """Apply the pruning rewrites; ``None`` means the template is rejected.

    ``!!a`` becomes ``a``; a negated atom becomes the atom with the dual
    comparator; operands of ``&&``/``||`` are sorted by their
    parameter-blind printed form and identical operands reject the
    template; ``G`` directly under ``G`` and ``F`` directly under ``F`` reject.
    """
    phi = psi.formula if isinstance(psi, ParametricFormula) else psi
    out = _canon(phi)
    return None if out is None else fresh_names(out)


def _canon(phi: Formula) -> Formula | None:
    if isinstance(phi, Not):
        inner = phi.arg
        if isinstance(inner, Not):
            return _canon(inner.arg)
        inner = _canon(inner)
        if inner is None:
            return None
        if isinstance(inner, Atom):
            return negate_atom(inner)
        return Not(inner)
    if isinstance(phi, (Globally, Eventually)):
        arg = _canon(phi.arg)
        if arg is None or type(arg) is type(phi):
            return None
        return type(phi)(arg, phi.interval)
    if isinstance(phi, (And, Or)):
        a, b = _canon(phi.left), _canon(phi.right)
        if a is None or b is None:
            return None
        ka, kb = (erase(a), str(a)), (erase(b), str(b))
        if ka[0] == kb[0]:
            return None
        if kb < ka:
            a, b = b, a
        return type(phi)(a, b)
    if isinstance(phi, (Implies, Until)):
        a, b = _canon(phi.left), _canon(phi.right)
        if a is None or b is None:
            return None
        return replace(phi, left=a, right=b)
    return phi


class Enumerator:
    """Stateful source of PSTL templates in non-decreasing length.

    ``anchor_intervals`` makes every temporal operator start at 0
    (``G[0,?t]``) instead of carrying two time parameters.
    """

    def __init__(self, signals: Sequence[str], operators: Sequence[str] = DEFAULT_OPERATORS,
                 max_length: int = 5, anchor_intervals: bool = False):
        unknown = set(operators) - set(OPERATOR_ORDER)
        if unknown:
            raise ValueError(f"unknown operators {sorted(unknown)}")
        if not signals:
            raise ValueError("no signals to enumerate over")
        self.signals = list(signals)
        self.operators = list(operators)
        self.max_length = max_length
        self.anchor_intervals = anchor_intervals
        self.database: dict[int, list[Formula]] = {}
        self.cursor = 0
        self._seen: set[str] = set()
        self._gen = self._generate()

    def next_pstl(self) -> ParametricFormula | None:
        """The next template, or ``None`` once every length up to the budget is exhausted."""
        phi = next(self._gen, None)
        if phi is None:
            return None
        self.cursor += 1
        return ParametricFormula.from_formula(phi)

    def __iter__(self) -> Iterator[ParametricFormula]:
        while (psi := self.next_pstl()) is not None:
            yield psi

    def _interval(self) -> Interval:
        if self.anchor_intervals:
            return Interval(0.0, Param("new_hi"), True, True)
        return Interval(Param("new_lo"), Param("new_hi"), True, True)

    def _offer(self, cand: Formula, size: int) -> Formula | None:
        canon = canonicalize(cand)
        if canon is None or length(canon) != size:
            return None
        key = str(canon)
        if key in self._seen:
            return None
        self._seen.add(key)
        self.database.setdefault(size, []).append(canon)
        return canon

    def _generate(self) -> Iterator[Formula]:
        if self.max_length < 1:
            return
        for s in self.signals:
            for op in (">", "<"):
                got = self._offer(Atom(s, op, Param("p")), 1)
                if got is not None:
                    yield got
        for size in range(2, self.max_length + 1):
            for op in self.operators:
                if op in _UNARY:
                    operands = self.database.get(1, []) if op == "not" else self.database.get(size - 1, [])
                    if op == "not" and size != 2:
                        continue
                    for arg in list(operands):
                        arg = _tag(arg, "a")
                        cand = Not(arg) if op == "not" else _UNARY[op](arg, self._interval())
                        got = self._offer(cand, size)
                        if got is not None:
                            yield got
                else:
                    cls = _BINARY[op]
                    for left_len in range(1, size - 1):
                        right_len = size - 1 - left_len
                        for a in list(self.database.get(left_len, [])):
                            for b in list(self.database.get(right_len, [])):
                                a2, b2 = _tag(a, "a"), _tag(b, "b")
                                if cls is Until:
                                    cand = Until(a2, b2, self._interval())
                                else:
                                    cand = cls(a2, b2)
                                got = self._offer(cand, size)
                                if got is not None:
                                    yield got
            log.debug("enumerated all templates of length %d", size)


def _tag(phi: Formula, prefix: str) -> Formula:
    return _rename(phi, lambda p: Param(f"{prefix}_{p.name}"))
