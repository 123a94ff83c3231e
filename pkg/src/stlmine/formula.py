"""STL abstract syntax.

Formulas are immutable trees of frozen dataclasses, so structurally equal
formulas compare and hash equal. Atom constants and interval endpoints may
be :class:`Param` references; such trees are parametric (PSTL) templates and
must be instantiated before they can be monitored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Union

COMPARATORS = (">=", "<=", ">", "<")
POSITIVE = (">=", ">")
NEGATED = {">=": "<", "<": ">=", ">": "<=", "<=": ">"}


@dataclass(frozen=True)
class Param:
    """Reference to a named PSTL parameter."""

    name: str

    def __str__(self) -> str:
        return "?" + self.name


Number = Union[float, Param]


@dataclass(frozen=True)
class Interval:
    lo: Number = 0.0
    hi: Number = math.inf
    lo_closed: bool = True
    hi_closed: bool = False

    def __post_init__(self):
        for end in ("lo", "hi"):
            v = getattr(self, end)
            if not isinstance(v, Param):
                object.__setattr__(self, end, float(v))
        lo, hi = self.lo, self.hi
        if not isinstance(hi, Param) and math.isinf(hi):
            object.__setattr__(self, "hi_closed", False)
        if isinstance(lo, Param) or isinstance(hi, Param):
            return
        if not lo >= 0:
            raise ValueError(f"interval lower bound must be >= 0, got {lo}")
        if lo > hi:
            raise ValueError(f"malformed interval: lo {lo} > hi {hi}")
        if lo == hi and not (self.lo_closed and self.hi_closed):
            raise ValueError("a singleton interval must be closed on both ends")
        if math.isinf(lo):
            raise ValueError("interval lower bound must be finite")

    @property
    def is_unbounded(self) -> bool:
        """True for the default ``[0, inf)`` window written as a bare ``G``/``F``."""
        return (not isinstance(self.lo, Param) and not isinstance(self.hi, Param)
                and self.lo == 0 and math.isinf(self.hi) and self.lo_closed)

    def contains(self, d: float, eps: float) -> bool:
        lo_ok = d >= self.lo - eps if self.lo_closed else d > self.lo + eps
        hi_ok = d <= self.hi + eps if self.hi_closed else d < self.hi - eps
        return lo_ok and hi_ok


class Formula:
    """Base class of all STL nodes."""

    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __str__(self) -> str:
        from stlmine.printer import to_text

        return to_text(self)


@dataclass(frozen=True, repr=False)
class TrueF(Formula):
    def __repr__(self):
        return "TrueF()"


TRUE = TrueF()


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    signal: str
    op: str
    const: Number

    def __post_init__(self):
        if self.op not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.op!r}")
        if not isinstance(self.const, Param):
            if not math.isfinite(self.const):
                raise ValueError("atom constants must be finite")
            object.__setattr__(self, "const", float(self.const))

    def __repr__(self):
        return f"Atom({self.signal!r}, {self.op!r}, {self.const!r})"

    @property
    def positive(self) -> bool:
        return self.op in POSITIVE


@dataclass(frozen=True, repr=False)
class Not(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Not({self.arg!r})"


@dataclass(frozen=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"And({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"Or({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Implies(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"Implies({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Globally(Formula):
    arg: Formula
    interval: Interval = field(default_factory=Interval)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Globally({self.arg!r}, {self.interval!r})"


@dataclass(frozen=True, repr=False)
class Eventually(Formula):
    arg: Formula
    interval: Interval = field(default_factory=Interval)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Eventually({self.arg!r}, {self.interval!r})"


@dataclass(frozen=True, repr=False)
class Until(Formula):
    left: Formula
    right: Formula
    interval: Interval = field(default_factory=Interval)

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"Until({self.left!r}, {self.right!r}, {self.interval!r})"


BINARY = (And, Or, Implies, Until)
TEMPORAL = (Globally, Eventually, Until)


def walk(phi: Formula) -> Iterator[Formula]:
    """Pre-order traversal."""
    stack = [phi]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def length(phi: Formula) -> int:
    """Node count; a temporal node with its interval counts once."""
    return sum(1 for _ in walk(phi))


def support(phi: Formula) -> frozenset[str]:
    """Names of the signals occurring in atomic predicates."""
    return frozenset(n.signal for n in walk(phi) if isinstance(n, Atom))


def params(phi: Formula) -> list[str]:
    """Parameter names in order of first appearance."""
    seen: dict[str, None] = {}
    for node in walk(phi):
        if isinstance(node, Atom) and isinstance(node.const, Param):
            seen.setdefault(node.const.name)
        elif isinstance(node, TEMPORAL):
            for end in (node.interval.lo, node.interval.hi):
                if isinstance(end, Param):
                    seen.setdefault(end.name)
    return list(seen)


def negate_atom(atom: Atom) -> Atom:
    return Atom(atom.signal, NEGATED[atom.op], atom.const)


def map_children(phi: Formula, fn) -> Formula:
    """Rebuild ``phi`` with ``fn`` applied to each direct child."""
    if isinstance(phi, (Not, Globally, Eventually)):
        return replace(phi, arg=fn(phi.arg))
    if isinstance(phi, BINARY):
        return replace(phi, left=fn(phi.left), right=fn(phi.right))
    return phi


def to_nnf(phi: Formula) -> Formula:
    """Push negations down to the atoms.

    Implications are rewritten as ``!a || b`` and temporal operators are
    dualised. Two residual negations have no dual in this fragment and stay
    in place: ``!true`` and ``!(a U b)``. Robustness is preserved exactly.
    """
    return _nnf(phi, False)


def _nnf(phi: Formula, neg: bool) -> Formula:
    if isinstance(phi, TrueF):
        return Not(TRUE) if neg else TRUE
    if isinstance(phi, Atom):
        return negate_atom(phi) if neg else phi
    if isinstance(phi, Not):
        return _nnf(phi.arg, not neg)
    if isinstance(phi, And):
        cls = Or if neg else And
        return cls(_nnf(phi.left, neg), _nnf(phi.right, neg))
    if isinstance(phi, Or):
        cls = And if neg else Or
        return cls(_nnf(phi.left, neg), _nnf(phi.right, neg))
    if isinstance(phi, Implies):
        if neg:
            return And(_nnf(phi.left, False), _nnf(phi.right, True))
        return Or(_nnf(phi.left, True), _nnf(phi.right, False))
    if isinstance(phi, Globally):
        cls = Eventually if neg else Globally
        return cls(_nnf(phi.arg, neg), phi.interval)
    if isinstance(phi, Eventually):
        cls = Globally if neg else Eventually
        return cls(_nnf(phi.arg, neg), phi.interval)
    if isinstance(phi, Until):
        inner = Until(_nnf(phi.left, False), _nnf(phi.right, False), phi.interval)
        return Not(inner) if neg else inner
    raise TypeError(f"not a formula: {phi!r}")


def is_nnf(phi: Formula) -> bool:
    return all(
        not isinstance(n, Not) or isinstance(n.arg, (TrueF, Until))
        for n in walk(phi)
    ) and not any(isinstance(n, Implies) for n in walk(phi))


def conjunction(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disjunction(parts) -> Formula:
    parts = list(parts)
    if not parts:
        raise ValueError("empty disjunction")
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def flatten(phi: Formula, cls) -> list[Formula]:
    """Operands of a nested ``cls`` chain, left to right."""
    if isinstance(phi, cls):
        return flatten(phi.left, cls) + flatten(phi.right, cls)
    return [phi]
