"""1-jets at the origin: computation, unipotent-family classification and the
rotation number of a loop of maps."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .field import CenterCase, FieldSpec, IntegralSpec, boundary_point
from .flow import OrbitClock
from .matrix import Jet2, expm2
from .shift import BranchConflict, CallableMap, FlowShift, LinearMap, MapSpec, PolyMap, apply_map

FD_STEPS = (1e-4, 5e-5)
BREAKDOWN = 1e-4


class NumericalBreakdown(ArithmeticError):
    pass


class MarginViolated(ArithmeticError):
    pass


class NotNF2(ValueError):
    pass


class JetTag(enum.Enum):
    APlus = "APlus"
    AMinus = "AMinus"
    APrimePlus = "APrimePlus"
    APrimeMinus = "APrimeMinus"
    Kernel = "Kernel"
    Other = "Other"


# diagonal signs of ((s1, d), (0, s2)) per family
_FAMILIES = {
    JetTag.APlus: (1, 1),
    JetTag.AMinus: (-1, -1),
    JetTag.APrimePlus: (1, -1),
    JetTag.APrimeMinus: (-1, 1),
}


@dataclass(frozen=True)
class JetClass:
    tag: JetTag
    d: float | None = None

    @property
    def families(self) -> frozenset:
        """Families containing the jet; the kernel sits inside ``APlus``."""
        if self.tag is JetTag.Kernel:
            return frozenset({JetTag.Kernel, JetTag.APlus})
        return frozenset({self.tag})


@dataclass(frozen=True)
class JetEstimate:
    matrix: Jet2
    error: float


def _fd_jet(prim, fs, tol) -> JetEstimate:
    """Central differences at O, Richardson-combined over two steps."""
    cols = []
    err = 0.0
    for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        ds = []
        for h in FD_STEPS:
            Z = np.array([h * e, -h * e])
            W = prim(Z, fs, tol)
            ds.append((W[0] - W[1]) / (2 * h))
        d1, d2 = ds
        gap = float(np.max(np.abs(d1 - d2)))
        if not math.isfinite(gap) or gap > BREAKDOWN:
            raise NumericalBreakdown(f"finite-difference jets disagree by {gap:.3e}")
        r = (4 * d2 - d1) / 3
        err = max(err, gap / 3)
        cols.append(r)
    return JetEstimate(Jet2.from_array(np.column_stack(cols)), err)


def _prim_jet(prim, fs, tol) -> JetEstimate:
    if isinstance(prim, LinearMap):
        (a, b), (c, d) = prim.m
        return JetEstimate(Jet2(a, b, c, d), 0.0)
    if isinstance(prim, PolyMap):
        h1, h2 = prim.h1, prim.h2
        return JetEstimate(Jet2(h1.coeff(1, 0), h1.coeff(0, 1), h2.coeff(1, 0), h2.coeff(0, 1)), 0.0)
    if isinstance(prim, (FlowShift, CallableMap)):
        return _fd_jet(prim, fs, tol)
    raise TypeError(f"unknown primitive {prim!r}")


def jet_estimate(m: MapSpec, fs: FieldSpec | None = None, tol: float = 1e-12) -> JetEstimate:
    """Jacobi matrix at O with a propagated error estimate (chain rule across primitives)."""
    J = Jet2.identity()
    err = 0.0
    for p in m.primitives:
        pj = _prim_jet(p, fs, tol)
        # entrywise bound for the product of two perturbed 2x2 matrices
        err = 2 * (err * float(np.max(np.abs(pj.matrix.array()))) + pj.error * float(np.max(np.abs(J.array()))))
        J = pj.matrix @ J
    return JetEstimate(J, err)


def jet_at_origin(m: MapSpec, fs: FieldSpec | None = None, tol: float = 1e-12) -> Jet2:
    return jet_estimate(m, fs, tol).matrix


def jet_of_flow_map(nabla: Jet2, tau: float) -> Jet2:
    """``exp(tau * nabla)``: the jet at O of the time-``tau`` flow map."""
    return expm2(nabla, tau)


def classify_jet(J: Jet2, tol: float = 1e-5) -> JetClass:
    a, b, c, d = (float(v) for v in (J.a, J.b, J.c, J.d))
    if abs(c) > tol:
        return JetClass(JetTag.Other)
    if max(abs(a - 1), abs(b), abs(d - 1)) <= tol:
        return JetClass(JetTag.Kernel, b)
    for tag, (s1, s2) in _FAMILIES.items():
        if abs(a - s1) <= tol and abs(d - s2) <= tol:
            return JetClass(tag, b)
    return JetClass(JetTag.Other)


def collect_jet_image(fs: FieldSpec, maps: Iterable[MapSpec], tol: float = 1e-5, digits: int = 6) -> set[JetClass]:
    """Observed jet classes of a map corpus; ``d`` is rounded to ``digits`` for deduplication."""
    out = set()
    for m in maps:
        jc = classify_jet(jet_at_origin(m, fs), tol)
        out.add(JetClass(jc.tag, None if jc.d is None else round(jc.d, digits) + 0.0))
    return out


def jet_report(m: MapSpec, fs: FieldSpec | None = None, tol: float = 1e-5) -> dict:
    est = jet_estimate(m, fs)
    jc = classify_jet(est.matrix, tol)
    return {
        "matrix": [[float(v) for v in row] for row in est.matrix.rows],
        "class": jc.tag.value,
        "d": jc.d,
        "error": est.error,
    }


# -- rotation number ------------------------------------------------------------

Family = Callable[[float], MapSpec]


def rotation_number(
    fs: FieldSpec,
    intspec: IntegralSpec,
    family: Family,
    K: int = 16,
    angle: float = 0.0,
    tol: float = 1e-10,
    fix_tol: float = 1e-6,
    margin: float = 0.25,
) -> int:
    """Full boundary turns made by a loop of maps from the identity to a map fixing ``dV``.

    ``Lambda(k, z_b)`` at one boundary point is tracked across ``K + 1``
    parameter samples by choosing, at each step, the branch nearest the
    previous value.
    """
    zb = boundary_point(intspec, angle=angle)
    clock = OrbitClock(fs, zb, tol)
    theta = clock.theta
    ks = np.linspace(0.0, 1.0, K + 1)
    prev = None
    first = None
    for k in ks:
        w = apply_map(family(float(k)), zb, fs, tol)
        raw = clock.time_of_point(w)
        if prev is None:
            if np.hypot(*(w - zb)) > fix_tol:
                raise ValueError("family(0) does not fix the boundary point")
            val = raw - theta if raw > theta / 2 else raw
            first = val
        else:
            val = raw + round((prev - raw) / theta) * theta
            if abs(val - prev) > theta / 4:
                raise BranchConflict(f"Lambda jumps by {val - prev:.6g} between parameter samples (theta {theta:.6g})")
        prev = val
    if np.hypot(*(w - zb)) > fix_tol:
        raise MarginViolated("family(1) does not fix the boundary")
    q = (prev - first) / theta
    n = round(q)
    if 0.5 - abs(q - n) < margin:
        raise MarginViolated(f"turn count {q:.6f} is not near an integer")
    return int(n)


def concatenate_families(f1: Family, f2: Family) -> Family:
    """Run ``f1`` on ``[0, 1/2]``, then ``f2`` after ``f1(1)`` on ``[1/2, 1]``."""
    end = f1(1.0)

    def fam(k: float) -> MapSpec:
        if k <= 0.5:
            return f1(2 * k)
        return end.then(f2(2 * k - 1))

    return fam


def boundary_rotation_family(theta_boundary: float, turns: int = 1) -> Family:
    """``k -> FlowShift(k * turns * theta(dV))``."""
    return lambda k: MapSpec.flow_shift(k * turns * theta_boundary, f"rotate({k:g})")


# -- normalization into the kernel of the jet map ----------------------------------------

def nilpotent_parameter(fs: FieldSpec):
    """``a`` for a linear part ``((0, a), (0, 0))``; anything else is rejected."""
    n = fs.nabla
    if fs.case is not CenterCase.NF2_NilpotentNonzero or not (n.a == 0 and n.c == 0 and n.d == 0 and n.b != 0):
        raise NotNF2(f"linear part {n} is not of the form ((0, a), (0, 0)) with a != 0")
    return n.b


def normalize_to_kernel(fs: FieldSpec, member: MapSpec, t: float, kernel_tol: float = 1e-8) -> MapSpec:
    """``B(t)(z) = Phi(member(z), -t * tau)`` with ``tau = J12 / a``.

    At ``t = 1`` the jet is the identity; members already in the kernel are
    returned unchanged for every ``t``.
    """
    a = float(nilpotent_parameter(fs))
    J = jet_at_origin(member, fs)
    if J.max_abs_diff(Jet2.identity()) <= kernel_tol:
        return member
    tau = float(J.b) / a
    if t == 0:
        return member
    return member.then(MapSpec.flow_shift(-t * tau, "normalize"))


def normalize_family(fs: FieldSpec, family: Family, t: float) -> Family:
    nilpotent_parameter(fs)
    return lambda k: normalize_to_kernel(fs, family(k), t)
