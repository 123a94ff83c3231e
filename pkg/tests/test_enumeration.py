import itertools

import pytest

from stlmine.enumeration import Enumerator, canonicalize, erase, fresh_names
from stlmine.formula import Eventually, Globally, walk
from stlmine.parser import parse_formula
from stlmine.printer import to_text
from stlmine.pstl import grid_sample


def first(enum, n):
    return [str(p) for p in itertools.islice(enum, n)]


def test_atoms_come_first():
    assert first(Enumerator(["x"]), 2) == ["x > ?p1", "x < ?p1"]


def test_globally_template_before_length_four():
    out = list(Enumerator(["x"], max_length=4))
    lengths = [p.length for p in out]
    idx = [str(p) for p in out].index("G[?t1,?t2](x < ?p1)")
    assert idx < lengths.index(4)


def test_lengths_non_decreasing_and_budget():
    out = list(Enumerator(["x", "y"], max_length=4))
    lengths = [p.length for p in out]
    assert lengths == sorted(lengths)
    assert max(lengths) == 4


def test_no_alpha_duplicates():
    out = list(Enumerator(["x", "y"], max_length=4))
    keys = [str(fresh_names(p.formula)) for p in out]
    assert len(keys) == len(set(keys))


def test_no_nested_same_temporal_operator():
    for p in itertools.islice(Enumerator(["x", "y"], max_length=6), 10_000):
        for node in walk(p.formula):
            if isinstance(node, (Globally, Eventually)):
                assert type(node.arg) is not type(node)


def test_oscillator_shape_reachable():
    target = parse_formula("G[?a,?b](u1 < ?c1 -> G[?d,?e](u2 > ?c2))")
    want = str(fresh_names(target))
    assert want in {str(p) for p in Enumerator(["u1", "u2"], max_length=5)}


def test_oscillator_shape_reachable_anchored():
    got = {str(p) for p in Enumerator(["u1", "u2"], max_length=5, anchor_intervals=True)}
    assert "G[0,?t1](u1 < ?p1 -> G[0,?t2](u2 > ?p2))" in got


def test_templates_roundtrip_and_have_valid_space():
    for p in Enumerator(["x", "y"], max_length=4):
        assert to_text(parse_formula(str(p))) == str(p)
        psi = p.with_ranges(value_ranges={"x": (0, 1), "y": (0, 1)}, time_range=(0, 10))
        assert not psi.space.is_empty()
        assert len(grid_sample(psi.space, 4)) == 4


def test_canonicalize_double_negation():
    assert canonicalize(parse_formula("!!(x > ?p)")) == parse_formula("x > ?p1")


def test_canonicalize_commutativity():
    a = canonicalize(parse_formula("x < ?p && x > ?q"))
    b = canonicalize(parse_formula("x > ?q && x < ?p"))
    assert a == b


def test_canonicalize_rejections():
    assert canonicalize(parse_formula("x > ?p && x > ?q")) is None
    assert canonicalize(parse_formula("G[?a,?b](G[?c,?d](x > ?p))")) is None
    assert canonicalize(parse_formula("F[?a,?b](F[?c,?d](x > ?p))")) is None
    assert canonicalize(parse_formula("G[?a,?b](F[?c,?d](x > ?p))")) is not None


def test_erase_ignores_names():
    assert erase(parse_formula("x > ?a")) == erase(parse_formula("x > ?b"))


def test_until_only_when_enabled():
    plain = list(Enumerator(["x"], max_length=3))
    with_u = list(Enumerator(["x"], ["not", "G", "F", "and", "or", "implies", "U"], max_length=3))
    assert not any(" U" in str(p) for p in plain)
    assert any(" U" in str(p) for p in with_u)


def test_unknown_operator():
    with pytest.raises(ValueError):
        Enumerator(["x"], ["G", "X"])


def test_exhaustion_returns_none():
    enum = Enumerator(["x"], max_length=1)
    assert enum.next_pstl() is not None
    assert enum.next_pstl() is not None
    assert enum.next_pstl() is None
    assert enum.cursor == 2
