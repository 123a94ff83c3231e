"""Turn a robustness-feature decision tree into one STL formula.

Each tree edge compares ``rho(psi_i)`` with a threshold ``c``. Shifting every
atom of ``nnf(psi_i)`` by ``c`` gives a formula whose robustness is exactly
``rho(psi_i) - c``, so the edge test becomes plain satisfaction (right edge)
or violation (left edge) of the shifted formula.
"""
from __future__ import annotations

from typing import Sequence

from stlmine.classifier import Split, leaves
from stlmine.formula import (
    And, Atom, Formula, Not, Or, TrueF, conjunction, disjunction,
    flatten, is_nnf, map_children, to_nnf,
)
from stlmine.monitor import satisfies
from stlmine.pstl import ParametricFormula, instantiate


class EmptyAssumption(ValueError):
    """The tree labels no region 1, so no input is accepted."""


def shift_formula(phi: Formula, c: float) -> Formula:
    """Formula whose robustness equals ``rho(phi) - c`` everywhere; ``phi`` must be NNF."""
    if not is_nnf(phi):
        raise ValueError("shift_formula needs a formula in negation normal form")
    return _shift(phi, float(c))


def _shift(phi: Formula, c: float) -> Formula:
    if isinstance(phi, Atom):
        return Atom(phi.signal, phi.op, phi.const + c if phi.positive else phi.const - c)
    if isinstance(phi, TrueF):
        return phi
    if isinstance(phi, Not):
        # residual !true or !(a U b): rho(!psi) - c = -(rho(psi) + c)
        return Not(_shift(phi.arg, -c))
    return map_children(phi, lambda sub: _shift(sub, c))


def _dedup(parts):
    out = []
    for p in parts:
        if p not in out:
            out.append(p)
    return out


def extract_stl(tree, psi: ParametricFormula, valuations: Sequence[dict]) -> Formula:
    """Disjunction over label-1 leaves of the conjunction of their shifted edge formulas."""
    nnf = {}
    paths = []
    for path, leaf in leaves(tree):
        if leaf.label != 1:
            continue
        conj = []
        for feature, threshold, went_right in path:
            if feature not in nnf:
                nnf[feature] = to_nnf(instantiate(psi, valuations[feature]))
            shifted = shift_formula(nnf[feature], threshold)
            conj.append(shifted if went_right else Not(shifted))
        if not conj:
            return conjunction([])
        paths.append(conjunction(_dedup(p for c in conj for p in flatten(c, And))))
    if not paths:
        raise EmptyAssumption("the tree has no leaf labelled 1")
    return disjunction(_dedup(p for d in paths for p in flatten(d, Or)))


def agreement(tree, phi: Formula, features, traces, tol: float = 1e-9) -> tuple[int, int]:
    """Compare tree predictions with ``phi`` on each trace.

    Returns ``(mismatches, excluded)``. A trace is excluded when a feature
    on its decision path lies within ``tol`` of the edge threshold, where
    float rounding in the shifted constants can legitimately flip the verdict.
    """
    mismatches = excluded = 0
    for row, tr in zip(features, traces):
        node, tie = tree, False
        while isinstance(node, Split):
            f = row[node.feature]
            tie |= bool(abs(f - node.threshold) <= tol * max(1.0, abs(node.threshold)))
            node = node.left if f < node.threshold else node.right
        if tie:
            excluded += 1
        elif satisfies(phi, tr) != (node.label == 1):
            mismatches += 1
    return mismatches, excluded
