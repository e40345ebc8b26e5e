"""2x2 real matrices: jets at the origin and their exponentials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Jet2:
    """A 2x2 matrix ``((a, b), (c, d))``.

    Entries may be exact (``int``/``Fraction``) or floats; exactness is kept
    through ``+``, ``*`` and ``@`` when every operand is exact.
    """

    a: object
    b: object
    c: object
    d: object

    @classmethod
    def of(cls, rows: Sequence[Sequence]) -> "Jet2":
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    @classmethod
    def from_array(cls, m) -> "Jet2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @classmethod
    def identity(cls) -> "Jet2":
        return cls(1, 0, 0, 1)

    @classmethod
    def zero(cls) -> "Jet2":
        return cls(0, 0, 0, 0)

    @property
    def rows(self) -> tuple[tuple, tuple]:
        return ((self.a, self.b), (self.c, self.d))

    def array(self) -> np.ndarray:
        return np.array([[float(self.a), float(self.b)], [float(self.c), float(self.d)]])

    @property
    def trace(self):
        return self.a + self.d

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in (self.a, self.b, self.c, self.d))

    def is_zero(self) -> bool:
        return all(v == 0 for v in (self.a, self.b, self.c, self.d))

    def __matmul__(self, other: "Jet2") -> "Jet2":
        return Jet2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __mul__(self, s) -> "Jet2":
        return Jet2(self.a * s, self.b * s, self.c * s, self.d * s)

    __rmul__ = __mul__

    def __add__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d)

    def __sub__(self, other: "Jet2") -> "Jet2":
        return self + other * -1

    def max_abs_diff(self, other: "Jet2") -> float:
        return float(np.max(np.abs(self.array() - other.array())))

    def to_json(self) -> list[list]:
        return [[_num(v) for v in row] for row in self.rows]

    def __str__(self):
        (a, b), (c, d) = self.rows
        return f"(({a}, {b}), ({c}, {d}))"


def _num(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return v


# Pade(6) coefficients: b_k = (12 - k)! 6! / (12! k! (6 - k)!)
_PADE6 = [math.factorial(12 - k) * math.factorial(6) / (math.factorial(12) * math.factorial(k) * math.factorial(6 - k)) for k in range(7)]


def _expm_pade6(m: np.ndarray) -> np.ndarray:
    norm = float(np.max(np.sum(np.abs(m), axis=1)))
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    a = m / (2.0 ** s)
    ident = np.eye(2)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    b = _PADE6
    u = a @ (b[1] * ident + b[3] * a2 + b[5] * a4)
    v = b[0] * ident + b[2] * a2 + b[4] * a4 + b[6] * a6
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def expm2(nabla: Jet2, tau: float) -> Jet2:
    """``exp(tau * nabla)``.

    Nilpotent and antisymmetric generators use closed forms; anything else
    goes through scaling-and-squaring with a diagonal Pade(6) approximant.
    """
    (a, b), (c, d) = nabla.rows
    a, b, c, d = (float(v) * tau for v in (a, b, c, d))
    if a * a + b * c == 0 and a + d == 0:  # m^2 = 0
        return Jet2(1.0 + a, b, c, 1.0 + d)
    if a == 0 and d == 0 and b == -c:
        w = c
        return Jet2(math.cos(w), -math.sin(w), math.sin(w), math.cos(w))
    return Jet2.from_array(_expm_pade6(np.array([[a, b], [c, d]])))
