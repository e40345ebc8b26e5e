"""Quick invariant suite behind ``tcenter verify``.

Every check reports a measured value and the bound it is compared with.
Nothing time- or machine-dependent goes into the results, so a fixed seed
reproduces the summary byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .deform import BumpProfile, CollarMap, bump_eval, collar_psi, fix_boundary
from .expr import gcd_poly
from .field import (
    CenterCase,
    circle_factors,
    formal_nilpotent_field,
    pair_factors,
    reduced_hamiltonian,
    rotation_field,
    sample_domain,
)
from .flow import flow, flow_many, period
from .jet import JetTag, boundary_rotation_family, classify_jet, jet_at_origin, jet_of_flow_map, rotation_number
from .shift import MapSpec, ShiftGrid, lie_derivative, recover_shift, scalar_fn


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "value": self.value, "bound": self.bound, "passed": self.passed}


def _le(name, value, bound) -> Check:
    value = float(value)
    return Check(name, value, float(bound), bool(value <= bound))


def _checks(seed: int, tol: float, grid: tuple[int, int]) -> list[Callable[[], Check]]:
    rng = np.random.default_rng(seed)
    rot, rot_int = rotation_field()
    circ2 = reduced_hamiltonian(circle_factors(2))
    pair = reduced_hamiltonian(pair_factors())
    L, A = grid

    def flow_closure():
        z = flow(rot, [1.0, 0.0], 2 * math.pi, tol)
        return _le("flow_closure_rotation", np.hypot(z[0] - 1, z[1]), 1e-8 if tol <= 1e-10 else 100 * tol)

    def group_law():
        Z = sample_domain(rot_int, 20, rng)
        s, t = rng.uniform(-2, 2, 20), rng.uniform(-2, 2, 20)
        a = flow_many(rot, flow_many(rot, Z, s, tol), t, tol)
        b = flow_many(rot, Z, s + t, tol)
        return _le("flow_group_law", np.max(np.hypot(*(a - b).T)), 10 * tol)

    def period_rotation():
        return _le("period_rotation", abs(period(rot, rot_int, [1.0, 0.0], tol).theta - 2 * math.pi), 1e-8)

    def period_beta2():
        return _le("period_circle_beta2", abs(period(circ2, None, [1.0, 0.0], tol).theta - math.pi / 2), 1e-8)

    def homogeneity():
        z = np.array([0.6, 0.3])
        t1 = period(pair, None, z, tol).theta
        t2 = period(pair, None, 0.5 * z, tol).theta
        return _le("period_homogeneity_k2", abs(t2 * 0.25 - t1) / t1, 1e-6)

    def case_tags():
        ok = pair.case is CenterCase.NF1_ZeroLinear and rot.case is CenterCase.NF3_NonDegenerate
        ok = ok and gcd_poly(pair.F1, pair.F2).is_constant()
        return Check("case_tags_and_coprimality", 0.0 if ok else 1.0, 0.0, ok)

    def roundtrip():
        g = ShiftGrid(rot, rot_int, L, A, tol)
        alpha = "1/10 + x/20"
        s = recover_shift(rot, rot_int, MapSpec.flow_shift(alpha), grid=g, tol=tol)
        ref = scalar_fn(alpha)(g.points[..., 0], g.points[..., 1])
        return _le("shift_roundtrip", np.max(np.abs(s.values - ref)), 1e-6)

    def lie_integral():
        Z = sample_domain(rot_int, 10, rng, 0.1, 1.0)
        v, _ = lie_derivative(rot, rot_int.f_hat, Z)
        return _le("lie_derivative_of_integral", np.max(np.abs(v)), 1e-8)

    def jet_rotation():
        tau = 0.7
        J = jet_at_origin(MapSpec.flow_shift(tau), rot)
        return _le("jet_flow_identity_rotation", J.max_abs_diff(jet_of_flow_map(rot.nabla, tau)), 1e-5)

    def jet_nilpotent():
        nf = formal_nilpotent_field(1)
        tau = 2.0
        jc = classify_jet(jet_of_flow_map(nf.nabla, tau))
        err = abs(jc.d - tau) if jc.tag is JetTag.APlus else math.inf
        return _le("jet_nilpotent_class", err, 1e-12)

    def bump_mid():
        p = BumpProfile(0.25, 0.75)
        return _le("bump_midpoint", abs(bump_eval(p, 0.5) - 0.5), 0.0)

    def collar():
        c = CollarMap(0.25)
        Z = sample_domain(rot_int, 50, rng, 0.0, 0.5)
        P = collar_psi(rot_int, c, Z)
        return _le("collar_level_identity", np.max(np.abs(rot_int(P[:, 0], P[:, 1]) - c.mu(rot_int(Z[:, 0], Z[:, 1])))), 1e-8)

    def boundary():
        g = ShiftGrid(rot, rot_int, 8, 8, tol)
        _, rep = fix_boundary(rot, rot_int, MapSpec.flow_shift("1/5"), lam="1/5", grid=g, tol=tol)
        return _le("fix_boundary_residual", rep.boundary_residual, 1e-10)

    def rho():
        n = rotation_number(rot, rot_int, boundary_rotation_family(2 * math.pi), K=8, tol=tol)
        return Check("rotation_number_full_turn", float(n), 1.0, n == 1)

    return [flow_closure, group_law, period_rotation, period_beta2, homogeneity, case_tags, roundtrip,
            lie_integral, jet_rotation, jet_nilpotent, bump_mid, collar, boundary, rho]


def run_verify(seed: int = 0, tol: float = 1e-10, grid: tuple[int, int] = (8, 8)) -> list[Check]:
    out = []
    for fn in _checks(seed, tol, grid):
        try:
            out.append(fn())
        except Exception as exc:  # a crashing check is a failed check
            out.append(Check(f"{fn.__name__}: {type(exc).__name__}", math.nan, math.nan, False))
    return out
