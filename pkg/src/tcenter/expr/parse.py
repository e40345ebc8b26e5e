"""Recursive-descent parser for polynomial expressions in ``x`` and ``y``.

Grammar (precedence ``^`` > unary ``-`` > ``* /`` > ``+ -``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' INT)?
    atom   := INT | 'x' | 'y' | '(' expr ')'

``p/q`` rational literals fall out of ``term``; division is only accepted
by a nonzero constant so the result stays a polynomial.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .poly import Poly2


class ParseError(ValueError):
    """Malformed input. Carries the offending position and the expected tokens."""

    def __init__(self, text: str, position: int, expected: set[str], found: str):
        self.text = text
        self.position = position
        self.expected = frozenset(expected)
        self.found = found
        exp = ", ".join(sorted(self.expected))
        super().__init__(
            f"at position {position}: expected one of {{{exp}}}, found {found!r}\n"
            f"  {text}\n  {' ' * position}^"
        )


class NonPolynomialError(ValueError):
    """Well-formed expression that does not denote a polynomial (e.g. ``x^-1``, ``1/x``)."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"at position {position}: {message}")


@dataclass(frozen=True)
class _Tok:
    kind: str  # INT, VAR, OP, LPAREN, RPAREN, END
    text: str
    pos: int


_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([xy])|([-+*/^])|(\()|(\)))")


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(text, pos, {"INT", "x", "y", "operator", "(", ")"}, text[pos])
        start = m.start(m.lastindex)
        if m.group(1):
            toks.append(_Tok("INT", m.group(1), start))
        elif m.group(2):
            toks.append(_Tok("VAR", m.group(2), start))
        elif m.group(3):
            toks.append(_Tok("OP", m.group(3), start))
        elif m.group(4):
            toks.append(_Tok("LPAREN", "(", start))
        else:
            toks.append(_Tok("RPAREN", ")", start))
        pos = m.end()
    toks.append(_Tok("END", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _fail(self, expected: set[str]):
        t = self.tok
        raise ParseError(self.text, t.pos, expected, t.text or "<end>")

    def _is_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.text in ops

    def parse(self) -> Poly2:
        p = self.expr()
        if self.tok.kind != "END":
            self._fail({"+", "-", "*", "/", "^", "<end>"})
        return p

    def expr(self) -> Poly2:
        p = self.term()
        while self._is_op("+", "-"):
            op = self.tok.text
            self.i += 1
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Poly2:
        p = self.unary()
        while self._is_op("*", "/"):
            op = self.tok.text
            pos = self.tok.pos
            self.i += 1
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant():
                    raise NonPolynomialError("division by a non-constant expression", pos)
                c = q.at_origin()
                if c == 0:
                    raise NonPolynomialError("division by zero", pos)
                p = p.scale(1 / c)
        return p

    def unary(self) -> Poly2:
        if self._is_op("-"):
            self.i += 1
            return -self.unary()
        if self._is_op("+"):
            self.i += 1
            return self.unary()
        return self.power()

    def power(self) -> Poly2:
        base = self.atom()
        if self._is_op("^"):
            self.i += 1
            if self._is_op("-"):
                raise NonPolynomialError("negative exponent", self.tok.pos)
            if self.tok.kind != "INT":
                self._fail({"INT"})
            n = int(self.tok.text)
            self.i += 1
            if self._is_op("^"):
                self._fail({"+", "-", "*", "/", ")", "<end>"})
            return base ** n
        return base

    def atom(self) -> Poly2:
        t = self.tok
        if t.kind == "INT":
            self.i += 1
            return Poly2.const(Fraction(int(t.text)))
        if t.kind == "VAR":
            self.i += 1
            return Poly2.x() if t.text == "x" else Poly2.y()
        if t.kind == "LPAREN":
            self.i += 1
            p = self.expr()
            if self.tok.kind != "RPAREN":
                self._fail({")", "+", "-", "*", "/", "^"})
            self.i += 1
            return p
        self._fail({"INT", "x", "y", "(", "-"})


def parse_poly(text: str) -> Poly2:
    """Parse ``text`` into an exact :class:`Poly2`.

    >>> str(parse_poly("(x+y)^2 - x^2 - 2*x*y"))
    'y^2'
    """
    return _Parser(text).parse()
