"""Parametric STL templates, valuations and grid sampling of the parameter box."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from stlmine.formula import (
    TEMPORAL, Atom, Formula, Interval, Param, length, map_children, walk,
)
from stlmine.parser import parse_formula

VALUE = "value"
TIME = "time"

Valuation = Mapping[str, float]


@dataclass(frozen=True)
class Parameter:
    name: str
    kind: str
    lo: float | None = None
    hi: float | None = None
    signal: str | None = None  # host signal of a value parameter

    def __post_init__(self):
        if self.kind not in (VALUE, TIME):
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if self.bounded:
            if self.lo > self.hi:
                raise ValueError(f"parameter {self.name}: lo {self.lo} > hi {self.hi}")
            if self.kind == TIME and self.lo < 0:
                raise ValueError(f"time parameter {self.name} must have lo >= 0")

    @property
    def bounded(self) -> bool:
        return self.lo is not None and self.hi is not None


@dataclass(frozen=True)
class ParametricFormula:
    """A PSTL template: a formula whose constants may be :class:`Param` refs."""

    formula: Formula
    params: tuple[Parameter, ...] = ()
    interval_pairs: tuple[tuple, ...] = field(default=(), compare=False)

    @classmethod
    def from_formula(cls, formula: Formula, ranges: Mapping[str, Sequence[float]] | None = None):
        """Declare the parameters of ``formula`` with kinds inferred from position."""
        kinds: dict[str, tuple[str, str | None]] = {}
        pairs = []

        def declare(name, kind, signal=None):
            old = kinds.get(name)
            if old is not None and old[0] != kind:
                raise ValueError(f"parameter {name!r} used both as a value and a time bound")
            if old is not None and kind == VALUE and old[1] != signal:
                signal = None
            kinds[name] = (kind, signal)

        for node in walk(formula):
            if isinstance(node, Atom) and isinstance(node.const, Param):
                declare(node.const.name, VALUE, node.signal)
            elif isinstance(node, TEMPORAL):
                iv = node.interval
                for end in (iv.lo, iv.hi):
                    if isinstance(end, Param):
                        declare(end.name, TIME)
                if isinstance(iv.lo, Param) or isinstance(iv.hi, Param):
                    pairs.append((iv.lo, iv.hi))
        ranges = dict(ranges or {})
        unknown = set(ranges) - set(kinds)
        if unknown:
            raise ValueError(f"ranges given for undeclared parameters: {sorted(unknown)}")
        declared = []
        for name, (kind, signal) in kinds.items():
            lo, hi = ranges.get(name, (None, None))
            declared.append(Parameter(name, kind,
                                      None if lo is None else float(lo),
                                      None if hi is None else float(hi), signal))
        return cls(formula, tuple(declared), tuple(pairs))

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def length(self) -> int:
        return length(self.formula)

    def with_ranges(self, ranges: Mapping[str, Sequence[float]] | None = None, *,
                    value_ranges: Mapping[str, Sequence[float]] | None = None,
                    time_range: Sequence[float] | None = None) -> "ParametricFormula":
        """Attach ranges by parameter name, by host signal, or one range for all time params."""
        ranges = ranges or {}
        out = []
        for p in self.params:
            if p.name in ranges:
                lo, hi = ranges[p.name]
            elif p.kind == VALUE and value_ranges and p.signal in value_ranges:
                lo, hi = value_ranges[p.signal]
            elif p.kind == TIME and time_range is not None:
                lo, hi = time_range
            else:
                lo, hi = p.lo, p.hi
            out.append(replace(p, lo=None if lo is None else float(lo),
                               hi=None if hi is None else float(hi)))
        return replace(self, params=tuple(out))

    @property
    def space(self) -> "ParamSpace":
        return ParamSpace(self.params, self.interval_pairs)

    def __str__(self) -> str:
        return str(self.formula)


def parse_pstl(text: str, ranges: Mapping[str, Sequence[float]] | None = None) -> ParametricFormula:
    return ParametricFormula.from_formula(parse_formula(text), ranges)


def _resolve(end, nu: Valuation) -> float:
    return float(nu[end.name]) if isinstance(end, Param) else float(end)


@dataclass(frozen=True)
class ParamSpace:
    """Box of parameter ranges plus ``lo < hi`` for every parametric interval."""

    params: tuple[Parameter, ...]
    interval_pairs: tuple[tuple, ...] = ()

    def check(self, nu: Valuation, tol: float = 1e-9) -> None:
        for p in self.params:
            if p.name not in nu:
                raise ValueError(f"valuation is missing parameter {p.name!r}")
            v = float(nu[p.name])
            if not math.isfinite(v):
                raise ValueError(f"parameter {p.name} has non-finite value {v}")
            if p.bounded and not (p.lo - tol <= v <= p.hi + tol):
                raise ValueError(f"parameter {p.name}={v} outside [{p.lo}, {p.hi}]")
            if p.kind == TIME and v < 0:
                raise ValueError(f"time parameter {p.name}={v} is negative")
        for lo, hi in self.interval_pairs:
            a, b = _resolve(lo, nu), _resolve(hi, nu)
            if not a < b:
                raise ValueError(f"interval ordering violated: {lo}={a} is not < {hi}={b}")

    def is_valid(self, nu: Valuation) -> bool:
        try:
            self.check(nu)
        except ValueError:
            return False
        return True

    def is_empty(self) -> bool:
        bounds = {p.name: (p.lo, p.hi) for p in self.params}
        for lo, hi in self.interval_pairs:
            a = bounds[lo.name][0] if isinstance(lo, Param) else lo
            b = bounds[hi.name][1] if isinstance(hi, Param) else hi
            if not a < b:
                return True
        return False


def instantiate(psi: ParametricFormula, nu: Valuation) -> Formula:
    """Replace every parameter reference in ``psi`` by its value in ``nu``."""
    psi.space.check(nu)
    return _subst(psi.formula, nu)


def _subst(phi: Formula, nu: Valuation) -> Formula:
    if isinstance(phi, Atom):
        if isinstance(phi.const, Param):
            return Atom(phi.signal, phi.op, float(nu[phi.const.name]))
        return phi
    out = map_children(phi, lambda c: _subst(c, nu))
    if isinstance(phi, TEMPORAL):
        iv = phi.interval
        if isinstance(iv.lo, Param) or isinstance(iv.hi, Param):
            out = replace(out, interval=Interval(_resolve(iv.lo, nu), _resolve(iv.hi, nu),
                                                 iv.lo_closed, iv.hi_closed))
    return out


def _axis(p: Parameter, count: int) -> np.ndarray:
    if count == 1:
        return np.array([(p.lo + p.hi) / 2.0])
    return np.linspace(p.lo, p.hi, count)


def grid_sample(space: ParamSpace, m: int, max_points: int = 5_000_000) -> list[dict[str, float]]:
    """``m`` valuations from a regular lattice over the parameter box.

    Per-axis counts grow round-robin (so they stay as equal as possible)
    until the lattice holds at least ``m`` points satisfying the interval
    ordering constraints; valid points are then taken in lexicographic axis
    order and truncated to ``m``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    params = space.params
    if not params:
        return [{} for _ in range(m)]
    for p in params:
        if not p.bounded:
            raise ValueError(f"parameter {p.name!r} has no range")
    if space.is_empty():
        raise ValueError("parameter space is empty under the interval constraints")
    index = {p.name: k for k, p in enumerate(params)}
    counts = [1] * len(params)
    while True:
        total = math.prod(counts)
        if total >= m:
            axes = [_axis(p, c) for p, c in zip(params, counts)]
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(params))
            ok = np.ones(len(grid), dtype=bool)
            for lo, hi in space.interval_pairs:
                a = grid[:, index[lo.name]] if isinstance(lo, Param) else lo
                b = grid[:, index[hi.name]] if isinstance(hi, Param) else hi
                ok &= a < b
            valid = grid[ok]
            if len(valid) >= m:
                names = [p.name for p in params]
                return [dict(zip(names, map(float, row))) for row in valid[:m]]
        if total > max_points:
            raise ValueError("lattice grew too large before reaching m valid points")
        k = counts.index(min(counts))
        counts[k] += 1
