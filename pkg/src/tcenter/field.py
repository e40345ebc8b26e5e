"""TC vector fields with polynomial components.

Construction from factored homogeneous polynomials (reduced Hamiltonian
fields), linearization at the origin, normal-form case tags and the first
strong integral.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .expr import Poly2, exact_div, gcd_poly, normalize, parse_poly
from .matrix import Jet2


class FieldError(ValueError):
    """Invalid field data (bad quadratic form, non-vanishing field at O, ...)."""


class GcdMismatch(ArithmeticError):
    """The closed-form divisor disagrees with the generic polynomial GCD."""


class NoConvergence(RuntimeError):
    pass


class CenterCase(enum.Enum):
    NF1_ZeroLinear = "NF1"
    NF2_NilpotentNonzero = "NF2"
    NF3_NonDegenerate = "NF3"
    NotTC = "NotTC"

    @property
    def degenerate(self) -> bool:
        return self in (CenterCase.NF1_ZeroLinear, CenterCase.NF2_NilpotentNonzero)


@dataclass(frozen=True)
class QuadForm:
    """``a*x^2 + 2*b*x*y + c*y^2``, positive definite."""

    a: Fraction
    b: Fraction
    c: Fraction

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if not (self.a > 0 and self.a * self.c - self.b * self.b > 0):
            raise FieldError(f"quadratic form {self} is not positive definite")

    def poly(self) -> Poly2:
        return Poly2({(2, 0): self.a, (1, 1): 2 * self.b, (0, 2): self.c})

    def proportional_to(self, other: "QuadForm") -> bool:
        u, v = (self.a, self.b, self.c), (other.a, other.b, other.c)
        return all(u[i] * v[j] == u[j] * v[i] for i in range(3) for j in range(3))

    def __str__(self):
        return str(self.poly())


@dataclass(frozen=True)
class HomogFactoredPoly:
    """``f = prod Q_j ** beta_j`` with pairwise non-proportional definite ``Q_j``."""

    factors: tuple[tuple[QuadForm, int], ...]

    def __post_init__(self):
        facs = tuple((q, int(b)) for q, b in self.factors)
        object.__setattr__(self, "factors", facs)
        if not facs:
            raise FieldError("at least one factor is required")
        for q, beta in facs:
            if beta < 1:
                raise FieldError(f"exponent {beta} must be a positive integer")
        for i in range(len(facs)):
            for j in range(i + 1, len(facs)):
                if facs[i][0].proportional_to(facs[j][0]):
                    raise FieldError(f"factors {facs[i][0]} and {facs[j][0]} are proportional")

    @classmethod
    def of(cls, *pairs) -> "HomogFactoredPoly":
        """``HomogFactoredPoly.of(((1, 0, 1), 1), ((1, 0, 2), 1))``."""
        return cls(tuple((q if isinstance(q, QuadForm) else QuadForm(*q), b) for q, b in pairs))

    @property
    def k(self) -> int:
        return len(self.factors)

    @property
    def degree(self) -> int:
        return 2 * sum(b for _, b in self.factors)

    def expand(self) -> Poly2:
        out = Poly2.const(1)
        for q, beta in self.factors:
            out = out * q.poly() ** beta
        return out

    def divisor(self) -> Poly2:
        """``D = prod Q_j ** (beta_j - 1)``."""
        out = Poly2.const(1)
        for q, beta in self.factors:
            out = out * q.poly() ** (beta - 1)
        return out

    def label(self) -> str:
        return " * ".join(f"({q})" + (f"^{b}" if b > 1 else "") for q, b in self.factors)


@dataclass(frozen=True)
class FieldSpec:
    """``F = F1 d/dx + F2 d/dy`` with its linear part and case tag at O."""

    F1: Poly2
    F2: Poly2
    nabla: Jet2
    case: CenterCase
    name: str = "field"
    source: HomogFactoredPoly | None = field(default=None, compare=False)

    @classmethod
    def from_components(cls, F1, F2, name: str = "field") -> "FieldSpec":
        F1 = parse_poly(F1) if isinstance(F1, str) else F1
        F2 = parse_poly(F2) if isinstance(F2, str) else F2
        if F1.at_origin() != 0 or F2.at_origin() != 0:
            raise FieldError("the field must vanish at the origin")
        nabla = _linear_part(F1, F2)
        return cls(F1, F2, nabla, classify_center(nabla), name)

    @property
    def homogeneous_degree(self) -> int | None:
        """Common degree ``d`` when both components are homogeneous of degree ``d``."""
        degs = {i + j for p in (self.F1, self.F2) for (i, j), _ in p.items()}
        return degs.pop() if len(degs) == 1 else None

    def rhs(self):
        """Vectorized right-hand side ``(t, z) -> F(z)`` for ``z`` of shape ``(..., 2)``."""
        f1, f2 = self.F1.evaluator(), self.F2.evaluator()

        def rhs(t, z):
            if z.ndim == 1:
                x, y = z.tolist()
                return np.array((f1(x, y), f2(x, y)))
            x, y = z[:, 0], z[:, 1]
            return np.stack([f1(x, y), f2(x, y)], axis=-1)

        return rhs

    def __call__(self, x, y):
        return self.F1.evaluator()(x, y), self.F2.evaluator()(x, y)

    def angular_speed(self, x, y):
        """``d(angle)/dt`` along the flow at ``(x, y)``."""
        u, v = self(x, y)
        return (x * v - y * u) / (x * x + y * y)


@dataclass(frozen=True)
class IntegralSpec:
    """Normalized first integral ``f_hat = f / eps`` on ``V = f^-1[0, eps]``."""

    f: Poly2
    eps: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "eps", Fraction(self.eps))
        if self.eps <= 0:
            raise FieldError("epsilon must be positive")
        if self.f.at_origin() != 0:
            raise FieldError("the integral must vanish at the origin")

    @property
    def f_hat(self) -> Poly2:
        return self.f.scale(1 / self.eps)

    def __call__(self, x, y):
        return self.f_hat.evaluator()(x, y)

    def gradient(self, x, y):
        fh = self.f_hat
        return fh.diff("x").evaluator()(x, y), fh.diff("y").evaluator()(x, y)


# -- operations ---------------------------------------------------------------

def _linear_part(F1: Poly2, F2: Poly2) -> Jet2:
    return Jet2(F1.coeff(1, 0), F1.coeff(0, 1), F2.coeff(1, 0), F2.coeff(0, 1))


def linearization(fs: FieldSpec) -> Jet2:
    """Exact Jacobian of ``(F1, F2)`` at the origin."""
    return _linear_part(fs.F1, fs.F2)


def classify_center(nabla: Jet2, tol: float = 0.0) -> CenterCase:
    """Normal-form case from trace and determinant (similarity invariants).

    ``tol`` only matters for float entries; exact entries compare exactly.
    """
    tr, det = nabla.trace, nabla.det
    zero = max(abs(float(v)) for v in (nabla.a, nabla.b, nabla.c, nabla.d)) <= tol
    if zero:
        return CenterCase.NF1_ZeroLinear
    if abs(tr) <= tol and abs(det) <= tol:
        return CenterCase.NF2_NilpotentNonzero
    if abs(tr) <= tol and det > tol:
        return CenterCase.NF3_NonDegenerate
    return CenterCase.NotTC


def reduced_hamiltonian(hp: HomogFactoredPoly, name: str | None = None) -> FieldSpec:
    """Reduced Hamiltonian field ``(-f_y / D, f_x / D)`` of ``f = prod Q_j^beta_j``."""
    f = hp.expand()
    fx, fy = f.diff("x"), f.diff("y")
    D = hp.divisor()
    g = gcd_poly(fx, fy)
    if normalize(D) != g:
        raise GcdMismatch(f"divisor {D} differs from gcd(f_x, f_y) = {g}")
    F1 = -exact_div(fy, D)
    F2 = exact_div(fx, D)
    if not gcd_poly(F1, F2).is_constant():
        raise GcdMismatch("reduced components are not coprime")
    fs = FieldSpec.from_components(F1, F2, name=name or hp.label())
    return FieldSpec(fs.F1, fs.F2, fs.nabla, fs.case, fs.name, hp)


def strong_integral(hp: HomogFactoredPoly, eps=Fraction(1)) -> IntegralSpec:
    return IntegralSpec(hp.expand(), Fraction(eps))


def level_point(intspec: IntegralSpec, level: float, angle: float, rtol: float = 1e-12) -> np.ndarray:
    """Point on the ray at ``angle`` where ``f_hat`` equals ``level``.

    The integral is assumed increasing along rays from the origin.
    """
    if level <= 0:
        if level == 0:
            return np.zeros(2)
        raise ValueError("level must be nonnegative")
    u = np.array([math.cos(angle), math.sin(angle)])
    fh = intspec.f_hat.evaluator()
    g = lambda r: fh(r * u[0], r * u[1]) - level
    hi = 1.0
    while g(hi) < 0:
        hi *= 2.0
        if hi > 1e8:
            raise NoConvergence(f"level {level} not reached along angle {angle}")
    lo = hi / 2
    while g(lo) > 0:
        lo /= 2
        if lo < 1e-300:
            raise NoConvergence(f"level {level} not bracketed along angle {angle}")
    r = brentq(g, lo, hi, xtol=1e-16, rtol=1e-15, maxiter=200)
    if abs(g(r)) > rtol * max(level, 1e-300) * 10 + 1e-15:
        raise NoConvergence(f"residual {g(r):.3e} at level {level}")
    return r * u


def boundary_point(hp_or_int, eps=Fraction(1), angle: float = 0.0) -> np.ndarray:
    """Point of ``f = eps`` on the ray at ``angle``."""
    intspec = hp_or_int if isinstance(hp_or_int, IntegralSpec) else strong_integral(hp_or_int, eps)
    return level_point(intspec, 1.0, angle)


def gradient_nonvanishing(intspec: IntegralSpec, points: np.ndarray) -> bool:
    gx, gy = intspec.gradient(points[:, 0], points[:, 1])
    return bool(np.all(np.hypot(gx, gy) > 0))


def sample_domain(intspec: IntegralSpec, n: int, rng: np.random.Generator, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """``n`` points with levels uniform in ``(lo, hi]`` and uniform angles."""
    levels = lo + (hi - lo) * (1.0 - rng.random(n))
    angles = rng.random(n) * 2 * math.pi
    return np.array([level_point(intspec, c, a) for c, a in zip(levels, angles)])


# -- canonical examples -----------------------------------------------------------

def circle_factors(beta: int = 1) -> HomogFactoredPoly:
    return HomogFactoredPoly.of(((1, 0, 1), beta))


def pair_factors() -> HomogFactoredPoly:
    """``(x^2 + y^2)(x^2 + 2 y^2)``: the k = 2 example with zero linear part."""
    return HomogFactoredPoly.of(((1, 0, 1), 1), ((1, 0, 2), 1))


def rotation_field() -> tuple[FieldSpec, IntegralSpec]:
    """Unit rotation ``(-y, x)`` with integral ``x^2 + y^2``."""
    fs = FieldSpec.from_components("-y", "x", name="rotation")
    return fs, IntegralSpec(parse_poly("x^2 + y^2"))


def formal_nilpotent_field(a=1) -> FieldSpec:
    """``(a*y, 0)``: a formal carrier for the nilpotent linear part ``((0, a), (0, 0))``."""
    return FieldSpec.from_components(Poly2.monomial(0, 1, Fraction(a)), Poly2(), name=f"nilpotent(a={a})")


def factors_from_json(items: Sequence[dict]) -> HomogFactoredPoly:
    return HomogFactoredPoly(
        tuple((QuadForm(Fraction(str(it["a"])), Fraction(str(it["b"])), Fraction(str(it["c"]))), int(it["beta"])) for it in items)
    )
