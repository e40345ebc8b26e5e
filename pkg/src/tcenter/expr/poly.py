"""Exact bivariate polynomials over the rationals."""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Iterable, Mapping, Union

Number = Union[int, Fraction]
Monomial = tuple[int, int]


class DivisionNotExact(ArithmeticError):
    """Raised when an exact polynomial division leaves a remainder."""


def _glex_key(mono: Monomial) -> tuple[int, int]:
    return (mono[0] + mono[1], mono[0])


class Poly2:
    """Immutable polynomial in ``x`` and ``y`` with :class:`Fraction` coefficients.

    Terms are stored as ``{(deg_x, deg_y): coefficient}`` with zero
    coefficients dropped.
    """

    __slots__ = ("_terms", "_hash", "_fn")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        clean: dict[Monomial, Fraction] = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in monomial {(i, j)}")
            c = Fraction(c)
            if c:
                clean[(int(i), int(j))] = clean.get((int(i), int(j)), Fraction(0)) + c
        self._terms = {m: c for m, c in clean.items() if c}
        self._hash = None
        self._fn = None

    # -- construction ----------------------------------------------------
    @classmethod
    def const(cls, c: Number) -> "Poly2":
        return cls({(0, 0): c})

    @classmethod
    def x(cls) -> "Poly2":
        return cls({(1, 0): 1})

    @classmethod
    def y(cls) -> "Poly2":
        return cls({(0, 1): 1})

    @classmethod
    def monomial(cls, i: int, j: int, c: Number = 1) -> "Poly2":
        return cls({(i, j): c})

    # -- basic accessors -------------------------------------------------
    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterable[tuple[Monomial, Fraction]]:
        return self._terms.items()

    def coeff(self, i: int, j: int) -> Fraction:
        return self._terms.get((i, j), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == (0, 0) for m in self._terms)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((i + j for i, j in self._terms), default=-1)

    def degree_in(self, var: str) -> int:
        k = 0 if var == "x" else 1
        return max((m[k] for m in self._terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({i + j for i, j in self._terms}) <= 1

    def monomials(self) -> list[Monomial]:
        """Monomials in descending graded-lex order."""
        return sorted(self._terms, key=_glex_key, reverse=True)

    def leading_term(self) -> tuple[Monomial, Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        m = max(self._terms, key=_glex_key)
        return m, self._terms[m]

    # -- arithmetic ------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "Poly2":
        if isinstance(other, Poly2):
            return other
        if isinstance(other, (int, Fraction)):
            return Poly2.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return Poly2(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly2({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Monomial, Fraction] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                m = (i1 + i2, j1 + j2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly2(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Poly2.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c: Number) -> "Poly2":
        c = Fraction(c)
        return Poly2({m: c * v for m, v in self._terms.items()})

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division of polynomial by zero")
            return self.scale(Fraction(1) / Fraction(other))
        if isinstance(other, Poly2):
            return exact_div(self, other)
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly2.const(other)
        if not isinstance(other, Poly2):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- calculus / evaluation -------------------------------------------
    def diff(self, var: str) -> "Poly2":
        return diff_poly(self, var)

    def __call__(self, x, y):
        return self.evaluator()(x, y)

    def evaluator(self) -> Callable:
        """Return a compiled Horner evaluator ``(x, y) -> value``.

        Works on Python floats and on numpy arrays alike.
        """
        if self._fn is None:
            self._fn = _compile(self)
        return self._fn

    def at_origin(self) -> Fraction:
        return self.coeff(0, 0)

    # -- printing --------------------------------------------------------
    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"Poly2({to_text(self)!r})"


def _horner_y(coeffs: dict[int, float]) -> str:
    # coeffs: {deg_y: value}; Horner in y
    top = max(coeffs)
    expr = repr(coeffs.get(top, 0.0))
    for k in range(top - 1, -1, -1):
        c = coeffs.get(k)
        expr = f"({expr})*y" if c is None else f"({expr})*y + {c!r}"
    return expr


def _compile(p: Poly2) -> Callable:
    if p.is_zero():
        return lambda x, y: 0.0 * x
    by_x: dict[int, dict[int, float]] = {}
    for (i, j), c in p.items():
        by_x.setdefault(i, {})[j] = float(c)
    top = max(by_x)
    expr = f"({_horner_y(by_x[top])})"
    for i in range(top - 1, -1, -1):
        inner = by_x.get(i)
        expr = f"({expr})*x" if inner is None else f"({expr})*x + ({_horner_y(inner)})"
    if p.is_constant():
        expr = f"{expr} + 0.0*x"
    return eval(f"lambda x, y: {expr}", {"__builtins__": {}})


def eval_poly(p: Poly2, z) -> float:
    """Evaluate ``p`` at the point ``z = (x, y)`` by nested Horner schemes."""
    x, y = float(z[0]), float(z[1])
    return float(p.evaluator()(x, y))


def diff_poly(p: Poly2, var: str) -> Poly2:
    """Exact formal partial derivative with respect to ``'x'`` or ``'y'``."""
    if var not in ("x", "y"):
        raise ValueError(f"unknown variable {var!r}")
    out = {}
    for (i, j), c in p.items():
        if var == "x" and i:
            out[(i - 1, j)] = c * i
        elif var == "y" and j:
            out[(i, j - 1)] = c * j
    return Poly2(out)


def exact_div(p: Poly2, d: Poly2) -> Poly2:
    """Quotient ``p / d``; raises :class:`DivisionNotExact` on a remainder."""
    if d.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    (dx, dy), dc = d.leading_term()
    q: dict[Monomial, Fraction] = {}
    r = p
    while not r.is_zero():
        (rx, ry), rc = r.leading_term()
        if rx < dx or ry < dy:
            raise DivisionNotExact(f"{p} is not divisible by {d}")
        m = (rx - dx, ry - dy)
        c = rc / dc
        q[m] = q.get(m, 0) + c
        r = r - Poly2.monomial(m[0], m[1], c) * d
    return Poly2(q)


def divides(d: Poly2, p: Poly2) -> bool:
    try:
        exact_div(p, d)
    except DivisionNotExact:
        return False
    return True


def content(p: Poly2) -> Fraction:
    """Positive rational ``c`` such that ``p / c`` has coprime integer coefficients."""
    if p.is_zero():
        return Fraction(0)
    den = lcm(*(c.denominator for _, c in p.items()))
    num = 0
    for _, c in p.items():
        num = gcd(num, abs(c.numerator * (den // c.denominator)))
    return Fraction(num, den)


def normalize(p: Poly2) -> Poly2:
    """Canonical associate: content 1 and positive graded-lex leading coefficient."""
    if p.is_zero():
        return p
    c = content(p)
    if p.leading_term()[1] < 0:
        c = -c
    return p.scale(1 / c)


def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _fmt_mono(i: int, j: int) -> str:
    parts = []
    if i:
        parts.append("x" if i == 1 else f"x^{i}")
    if j:
        parts.append("y" if j == 1 else f"y^{j}")
    return "*".join(parts)


def to_text(p: Poly2) -> str:
    """Canonical text, e.g. ``4*x*y^2 - 1/3``; parses back to ``p`` exactly."""
    if p.is_zero():
        return "0"
    out = []
    for k, (i, j) in enumerate(p.monomials()):
        c = p.coeff(i, j)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        mono = _fmt_mono(i, j)
        if not mono:
            body = _fmt_coeff(a)
        elif a == 1:
            body = mono
        else:
            body = f"{_fmt_coeff(a)}*{mono}"
        if k == 0:
            out.append(body if sign == "+" else f"-{body}")
        else:
            out.append(f" {sign} {body}")
    return "".join(out)
