"""Bivariate GCD over Q via subresultant remainder sequences in Q[x][y].

A bivariate polynomial is viewed as a polynomial in ``y`` whose coefficients
are univariate polynomials in ``x``. Univariate polynomials are tuples of
Fractions, lowest degree first, with no trailing zeros.
"""

from __future__ import annotations

from fractions import Fraction

from .poly import Poly2, normalize

UPoly = tuple  # tuple[Fraction, ...]
YPoly = list  # list[UPoly], index = degree in y


class BothZeroError(ValueError):
    """gcd(0, 0) is undefined."""


# -- univariate arithmetic over Q --------------------------------------------

def _trim(a) -> UPoly:
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return tuple(a)


def _uadd(a: UPoly, b: UPoly) -> UPoly:
    n = max(len(a), len(b))
    return _trim((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n))


def _uneg(a: UPoly) -> UPoly:
    return tuple(-c for c in a)


def _usub(a: UPoly, b: UPoly) -> UPoly:
    return _uadd(a, _uneg(b))


def _umul(a: UPoly, b: UPoly) -> UPoly:
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return _trim(out)


def _upow(a: UPoly, n: int) -> UPoly:
    out: UPoly = (Fraction(1),)
    for _ in range(n):
        out = _umul(out, a)
    return out


def _udivmod(a: UPoly, b: UPoly) -> tuple[UPoly, UPoly]:
    if not b:
        raise ZeroDivisionError
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    lb = b[-1]
    while len(a) >= len(b) and a:
        c = a[-1] / lb
        k = len(a) - len(b)
        q[k] = c
        for i, cb in enumerate(b):
            a[i + k] -= c * cb
        a = list(_trim(a))
    return _trim(q), _trim(a)


def _uexact(a: UPoly, b: UPoly) -> UPoly:
    q, r = _udivmod(a, b)
    if r:
        raise ArithmeticError("inexact division in Q[x]")
    return q


def _umonic(a: UPoly) -> UPoly:
    return tuple(c / a[-1] for c in a) if a else a


def _ugcd(a: UPoly, b: UPoly) -> UPoly:
    while b:
        a, b = b, _udivmod(a, b)[1]
    return _umonic(a)


# -- Q[x][y] -------------------------------------------------------------------

def _to_ypoly(p: Poly2) -> YPoly:
    dy = p.degree_in("y")
    rows: list[list[Fraction]] = [[] for _ in range(dy + 1)]
    for (i, j), c in p.items():
        row = rows[j]
        if len(row) <= i:
            row.extend([Fraction(0)] * (i + 1 - len(row)))
        row[i] = c
    return [_trim(r) for r in rows]


def _from_ypoly(a: YPoly) -> Poly2:
    return Poly2({(i, j): c for j, row in enumerate(a) for i, c in enumerate(row) if c})


def _ytrim(a: YPoly) -> YPoly:
    a = list(a)
    while a and not a[-1]:
        a.pop()
    return a


def _ycontent(a: YPoly) -> UPoly:
    g: UPoly = ()
    for c in a:
        if c:
            g = _ugcd(g, c) if g else _umonic(c)
    return g


def _ydiv_scalar(a: YPoly, c: UPoly) -> YPoly:
    return [_uexact(r, c) if r else () for r in a]


def _ymul_scalar(a: YPoly, c: UPoly) -> YPoly:
    return _ytrim([_umul(r, c) for r in a])


def _prem(a: YPoly, b: YPoly) -> YPoly:
    """Pseudo-remainder of ``a`` by ``b`` in ``y``."""
    db = len(b) - 1
    lb = b[-1]
    r = list(a)
    e = len(a) - len(b) + 1
    while len(r) - 1 >= db and r:
        lr = r[-1]
        k = len(r) - 1 - db
        r = [_umul(c, lb) for c in r]
        for i, cb in enumerate(b):
            r[i + k] = _usub(r[i + k], _umul(lr, cb))
        r = _ytrim(r)
        e -= 1
    if e > 0:
        r = _ymul_scalar(r, _upow(lb, e))
    return r


def _subresultant_gcd(a: YPoly, b: YPoly) -> YPoly:
    """Primitive-in-y GCD of primitive ``a``, ``b`` with deg a >= deg b >= 1."""
    g: UPoly = (Fraction(1),)
    h: UPoly = (Fraction(1),)
    while True:
        delta = len(a) - len(b)
        r = _prem(a, b)
        if not r:
            break
        if len(r) == 1:
            return [(Fraction(1),)]
        a, b = b, _ydiv_scalar(r, _umul(g, _upow(h, delta)))
        g = a[-1]
        if delta > 0:
            h = _uexact(_upow(g, delta), _upow(h, delta - 1))
    c = _ycontent(b)
    return _ydiv_scalar(b, c)


def gcd_poly(p: Poly2, q: Poly2) -> Poly2:
    """Greatest common divisor, normalized to content 1 and positive leading coefficient.

    Raises :class:`BothZeroError` if both inputs are zero.
    """
    if p.is_zero() and q.is_zero():
        raise BothZeroError("gcd of two zero polynomials")
    if p.is_zero():
        return normalize(q)
    if q.is_zero():
        return normalize(p)
    a, b = _to_ypoly(p), _to_ypoly(q)
    if len(a) < len(b):
        a, b = b, a
    ca, cb = _ycontent(a), _ycontent(b)
    c = _ugcd(ca, cb)
    a, b = _ydiv_scalar(a, ca), _ydiv_scalar(b, cb)
    if len(b) == 1:
        g: YPoly = [(Fraction(1),)]
    else:
        g = _subresultant_gcd(a, b)
    return normalize(_from_ypoly(_ymul_scalar(g, c)))
