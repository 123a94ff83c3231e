"""Recursive-descent parser for the STL text grammar.

Precedence from loosest to tightest: ``->`` (right associative), ``||``,
``&&``, ``U[a,b]`` (non-associative), then the prefix operators ``!``,
``G[a,b]`` and ``F[a,b]``. An omitted interval means ``[0,inf)``.
Parameters are written ``?name`` wherever a number may appear.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from stlmine.formula import (
    TRUE, And, Atom, Eventually, Formula, Globally, Implies, Interval, Not, Or,
    Param, Until,
)

RESERVED = {"G", "F", "U", "true", "not", "and", "or", "implies", "inf"}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<param>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<cmp>>=|<=|>|<)
  | (?P<andop>&&)
  | (?P<orop>\|\|)
  | (?P<punct>[!()\[\],])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int, text: str):
        super().__init__(f"{msg} at position {pos}: {text[:pos]}<HERE>{text[pos:]}")
        self.pos = pos


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unknown operator or character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            word = m.group()
            if kind == "ident":
                low = word
                if low in ("and", "or", "implies", "not"):
                    kind = {"and": "andop", "or": "orop", "implies": "arrow", "not": "punct"}[low]
                    word = "!" if low == "not" else word
            toks.append(_Tok(kind, word, pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.pos, self.text)

    def take(self, kind: str, text: str | None = None) -> _Tok:
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            self.error(f"expected {want!r}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.tok
        return tok.kind == kind and (text is None or tok.text == text)

    def parse(self) -> Formula:
        phi = self.implies()
        if not self.at("eof"):
            self.error(f"unexpected {self.tok.text!r}")
        return phi

    def implies(self) -> Formula:
        left = self.disj()
        if self.at("arrow"):
            self.i += 1
            return Implies(left, self.implies())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.at("orop"):
            self.i += 1
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.until()
        while self.at("andop"):
            self.i += 1
            left = And(left, self.until())
        return left

    def until(self) -> Formula:
        left = self.unary()
        if self.at("ident", "U"):
            self.i += 1
            iv = self.interval() if self.interval_ahead() else Interval()
            right = self.unary()
            if self.at("ident", "U"):
                self.error("'U' is non-associative; add parentheses")
            return Until(left, right, iv)
        return left

    def unary(self) -> Formula:
        if self.at("punct", "!"):
            self.i += 1
            return Not(self.unary())
        if self.at("ident", "G") or self.at("ident", "F"):
            cls = Globally if self.tok.text == "G" else Eventually
            self.i += 1
            iv = self.interval() if self.interval_ahead() else Interval()
            return cls(self.unary(), iv)
        return self.primary()

    def interval_ahead(self) -> bool:
        if not (self.at("punct", "[") or self.at("punct", "(")):
            return False
        nxt = self.toks[self.i + 1]
        after = self.toks[self.i + 2]
        numeric = nxt.kind in ("num", "param") or (nxt.kind == "ident" and nxt.text == "inf")
        return numeric and after.kind == "punct" and after.text == ","

    def bound(self) -> float | Param:
        tok = self.tok
        if tok.kind == "ident" and tok.text == "inf":
            self.i += 1
            return float("inf")
        return self.number()

    def number(self) -> float | Param:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return float(tok.text)
        if tok.kind == "param":
            self.i += 1
            return Param(tok.text[1:])
        self.error(f"expected a number, found {tok.text or 'end of input'!r}")

    def interval(self) -> Interval:
        start = self.tok
        lo_closed = self.tok.text == "["
        self.i += 1
        lo = self.bound()
        self.take("punct", ",")
        hi = self.bound()
        if not (self.at("punct", "]") or self.at("punct", ")")):
            self.error("expected ']' or ')' closing the interval")
        hi_closed = self.tok.text == "]"
        self.i += 1
        try:
            return Interval(lo, hi, lo_closed, hi_closed)
        except ValueError as exc:
            self.error(f"malformed interval ({exc})", start)

    def primary(self) -> Formula:
        tok = self.tok
        if tok.kind == "punct" and tok.text == "(":
            self.i += 1
            phi = self.implies()
            self.take("punct", ")")
            return phi
        if tok.kind == "ident":
            if tok.text == "true":
                self.i += 1
                return TRUE
            if tok.text in RESERVED:
                self.error(f"unexpected keyword {tok.text!r}")
            self.i += 1
            if not self.at("cmp"):
                self.error(f"unknown operator after signal {tok.text!r}; expected one of >= <= > <")
            op = self.take("cmp").text
            const = self.number()
            return Atom(tok.text, op, const)
        self.error(f"unexpected {tok.text or 'end of input'!r}")


def parse_formula(text: str) -> Formula:
    """Parse formula text into an AST; raises :class:`ParseError`."""
    return _Parser(text).parse()
