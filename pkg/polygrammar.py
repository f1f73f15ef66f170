#!/usr/bin/env python3
"""
polygrammar.py - read generating functions, worldlines and implicit systems
from plain text.

Grammar (whitespace is ignored between tokens):

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*   (division by numbers only)
    unary   := ("+" | "-") unary | power
    power   := atom ("^" INTEGER)?
    atom    := NUMBER | IMAG | NAME | "(" expr ")"
    NUMBER  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
             | "." digits [exponent]
    IMAG    := NUMBER "i" | "i"
    NAME    := one of the variable names allowed by the caller

A complex literal a+bi is written as the sum it is ("1.5+2i", "3-i").
Numbers are read exactly (decimal text -> Rational), so elimination done on
the parsed polynomials is exact.

Usage:
    poly = parse_polynomial("G*t1 - t2", GENFUNC_PROJECTIVE)
    pair = parse_polynomial("tau0 - xi0^2 - 1/4", GENFUNC_PAIR)
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import List, Sequence

import sympy as sp

log = logging.getLogger(__name__)

GENFUNC_PROJECTIVE = ("G", "t1", "t2")
GENFUNC_PAIR = ("xi0", "xi1", "tau0", "tau1")
WORLDLINE = ("s",)
IMPLICIT = ("t", "x", "y", "z")

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*^/()])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    """Malformed polynomial text; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int, text: str = "") -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.text = text


@dataclass
class _Token:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "number" and m.end() < len(text) and text[m.end()] == "i":
            # "2i" and "2.5e-1i" are imaginary literals
            nxt = m.end() + 1
            if nxt >= len(text) or not (text[nxt].isalnum() or text[nxt] == "_"):
                tokens.append(_Token("imag", value, pos))
                pos = nxt
                continue
        if kind != "ws":
            tokens.append(_Token(kind, value, pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.symbols = {name: sp.Symbol(name) for name in variables}

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.take()
        if tok.value != value:
            raise ParseError(f"expected {value!r}, found {tok.value or 'end of input'!r}", tok.pos, self.text)

    def parse(self) -> sp.Expr:
        expr = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.value!r}", tok.pos, self.text)
        return expr

    def expr(self) -> sp.Expr:
        value = self.term()
        while self.peek().value in ("+", "-"):
            op = self.take().value
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> sp.Expr:
        value = self.unary()
        while self.peek().value in ("*", "/"):
            tok = self.take()
            rhs = self.unary()
            if tok.value == "*":
                value = value * rhs
            else:
                # division only by numeric constants keeps the result polynomial
                if rhs.free_symbols or rhs == 0:
                    raise ParseError("division only by a nonzero number", tok.pos, self.text)
                value = value / rhs
        return value

    def unary(self) -> sp.Expr:
        tok = self.peek()
        if tok.value == "-":
            self.take()
            return -self.unary()
        if tok.value == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> sp.Expr:
        base = self.atom()
        if self.peek().value == "^":
            self.take()
            tok = self.take()
            if tok.kind != "number" or not tok.value.isdigit():
                raise ParseError("exponent must be a non-negative integer", tok.pos, self.text)
            return base ** int(tok.value)
        return base

    def atom(self) -> sp.Expr:
        tok = self.take()
        if tok.kind == "number":
            return sp.Rational(tok.value)
        if tok.kind == "imag":
            return sp.Rational(tok.value) * sp.I
        if tok.kind == "name":
            if tok.value == "i":
                return sp.I
            if tok.value not in self.symbols:
                allowed = ", ".join(self.symbols)
                raise ParseError(f"unknown variable {tok.value!r} (allowed: {allowed})", tok.pos, self.text)
            return self.symbols[tok.value]
        if tok.value == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {tok.value or 'end of input'!r}", tok.pos, self.text)


def parse_expr(text: str, variables: Sequence[str]) -> sp.Expr:
    """Parse ``text`` into an expanded sympy expression over ``variables``."""
    if not text or not text.strip():
        raise ParseError("empty polynomial", 0, text)
    expr = sp.expand(_Parser(text, variables).parse())
    log.debug("parsed %r -> %s", text, expr)
    return expr


def parse_polynomial(text: str, variables: Sequence[str]) -> sp.Poly:
    """Parse ``text`` into a ``sympy.Poly`` whose generators are ``variables``."""
    expr = parse_expr(text, variables)
    return sp.Poly(expr, *[sp.Symbol(v) for v in variables])


def format_polynomial(poly: sp.Poly) -> str:
    """Render a polynomial back into the grammar (used in manifests)."""
    text = str(poly.as_expr()).replace("**", "^").replace("I", "i")
    return text
