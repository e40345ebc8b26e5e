"""Bump truncation of shift functions, the homotopy A(t, k, z), boundary fixing,
the gradient collar psi and the change to a diffeomorphism."""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .expr import Poly2
from .field import FieldSpec, IntegralSpec
from .flow import check_tol, flow_many
from .integrate import solve
from .shift import (
    CallableMap,
    FlowShift,
    MapSpec,
    ShiftFunctionSample,
    ShiftGrid,
    apply_map,
    lie_derivative,
    recover_shift,
    scalar_fn,
)


class NotInjectiveOnUb(ValueError):
    pass


class CriterionViolated(ArithmeticError):
    """``F(alpha) <= -1`` somewhere: the shift is not a local diffeomorphism."""


class GradientVanishes(ArithmeticError):
    pass


class PsiInverseFailure(ArithmeticError):
    pass


def _g(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(u):
    """0 for ``u <= 0``, 1 for ``u >= 1``, smooth and increasing in between."""
    u = np.asarray(u, dtype=float)
    p, q = _g(u), _g(1.0 - u)
    return p / (p + q)


# -- bump profile ---------------------------------------------------------------

@dataclass(frozen=True)
class BumpProfile:
    a: float
    b: float

    def __post_init__(self):
        if not (0 < self.a < self.b < 1):
            raise ValueError(f"need 0 < a < b < 1, got a={self.a}, b={self.b}")

    def __call__(self, s):
        return bump_eval(self, s)


def bump_eval(p: BumpProfile, s):
    """``nu(s) = g(b - s) / (g(b - s) + g(s - a))`` with ``g(t) = exp(-1/t)``."""
    s_arr = np.asarray(s, dtype=float)
    u, v = _g(p.b - s_arr), _g(s_arr - p.a)
    out = u / (u + v)
    return float(out) if np.ndim(s) == 0 else out


Lam = Callable  # (k, x, y) -> values


def as_family(lam) -> Lam:
    """Accept ``lam(k, x, y)`` or a k-independent scalar function."""
    if callable(lam) and not isinstance(lam, Poly2) and _arity(lam) == 3:
        return lam
    f = scalar_fn(lam)
    return lambda k, x, y: f(x, y)


def _arity(fn) -> int:
    try:
        return len(inspect.signature(fn).parameters)
    except (TypeError, ValueError):
        return 2


def truncate_shift(intspec: IntegralSpec, lam, p: BumpProfile):
    """``alpha = (nu o f_hat) * Lambda``; samples are multiplied node-wise."""
    if isinstance(lam, ShiftFunctionSample):
        return lam.with_values(bump_eval(p, lam.levels)[:, None] * lam.values)
    f = scalar_fn(lam)
    return lambda x, y: bump_eval(p, intspec(x, y)) * f(x, y)


def beta(intspec: IntegralSpec, lam, p: BumpProfile, t: float, k: float, Z) -> np.ndarray:
    """``beta_{t,k} = ((1 - t) nu o f_hat + t) * Lambda_k`` at the rows of ``Z``."""
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    L = as_family(lam)
    w = (1.0 - t) * bump_eval(p, intspec(Z[:, 0], Z[:, 1])) + t
    return w * L(k, Z[:, 0], Z[:, 1])


def homotopy_A(fs: FieldSpec, intspec: IntegralSpec, lam, p: BumpProfile, t: float, k: float, z, tol: float = 1e-10) -> np.ndarray:
    """``A(t, k, z) = Phi(z, beta_{t,k}(z))``; ``t = 1`` gives ``Phi(z, Lambda_k)``,
    ``t = 0`` the truncated map. The origin is fixed."""
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    Z = np.array(z, dtype=float)
    single = Z.ndim == 1
    Z = Z.reshape(-1, 2)
    out = flow_many(fs, Z, beta(intspec, lam, p, t, k, Z), tol)
    return out[0] if single else out


# -- boundary fixing ---------------------------------------------------------------

@dataclass(frozen=True)
class FixBoundaryReport:
    a: float
    b: float
    min_lie: float
    boundary_residual: float
    ua_deviation: float
    halvings: int

    def to_json(self) -> dict:
        return {
            "profile": {"a": self.a, "b": self.b},
            "min_lie_derivative": self.min_lie,
            "boundary_residual": self.boundary_residual,
            "ua_deviation": self.ua_deviation,
            "halvings": self.halvings,
        }


def orbit_monotone(grid: ShiftGrid, values: np.ndarray) -> np.ndarray:
    """Per level: does ``t -> t + Lambda(t)`` keep the cyclic order of the nodes?"""
    T = grid.node_times + values
    step = np.diff(np.concatenate([T, T[:, :1] + grid.theta[:, None]], axis=1), axis=1)
    return np.all(step > 0, axis=1)


def fix_boundary(
    fs: FieldSpec,
    intspec: IntegralSpec,
    m: MapSpec,
    lam=None,
    profile: BumpProfile | None = None,
    grid: ShiftGrid | None = None,
    tol: float = 1e-10,
    min_b: float = 1e-3,
) -> tuple[MapSpec, FixBoundaryReport]:
    """``Omega' = Sh(nu o f_hat * Lambda)``: agrees with ``m`` on ``U_a``, identity off ``U_b``.

    Without a profile, ``b`` starts at 3/4 and halves until ``m`` keeps the
    orbit order of the grid nodes on every level inside ``U_b``; ``a = b/2``.
    """
    check_tol(tol)
    if grid is None:
        grid = ShiftGrid(fs, intspec, 16, 16, tol)
    if lam is None:
        lam = recover_shift(fs, intspec, m, grid=grid, tol=tol)
    if isinstance(lam, ShiftFunctionSample):
        node_vals = lam.values
        lam_fn = lam.interpolator(intspec)
    else:
        lam_fn = scalar_fn(lam)
        node_vals = lam_fn(grid.points[..., 0], grid.points[..., 1])
    ok = orbit_monotone(grid, node_vals)
    halvings = 0
    if profile is None:
        b = 0.75
        while not np.all(ok[grid.levels <= b]):
            b /= 2
            halvings += 1
            if b < min_b:
                raise NotInjectiveOnUb("m does not keep orbit order on any U_b with b >= %g" % min_b)
        profile = BumpProfile(b / 2, b)
    elif not np.all(ok[grid.levels <= profile.b]):
        raise NotInjectiveOnUb(f"m does not keep orbit order inside U_b, b={profile.b}")
    # an empty U_a on the grid would make every check below vacuous
    if not np.any(grid.levels <= profile.a):
        raise NotInjectiveOnUb(f"no grid level inside U_a (a={profile.a:g}); order cannot be confirmed on this grid")

    alpha = truncate_shift(intspec, lam_fn, profile)
    Z = grid.flat()
    lie, _ = lie_derivative(fs, alpha, Z)
    min_lie = float(np.min(lie))
    if min_lie <= -1:
        raise CriterionViolated(f"min F(alpha) = {min_lie:.6g} <= -1")
    out = MapSpec((FlowShift(alpha, "fix_boundary"),), f"fix_boundary({m.name})")

    outer = Z[intspec(Z[:, 0], Z[:, 1]) >= profile.b]
    bres = float(np.max(np.hypot(*(apply_map(out, outer, fs, tol) - outer).T))) if len(outer) else 0.0
    inner = Z[intspec(Z[:, 0], Z[:, 1]) <= profile.a]
    dev = float(np.max(np.hypot(*(apply_map(out, inner, fs, tol) - apply_map(m, inner, fs, tol)).T))) if len(inner) else 0.0
    return out, FixBoundaryReport(profile.a, profile.b, min_lie, bres, dev, halvings)


# -- collar ---------------------------------------------------------------------

@dataclass(frozen=True)
class CollarMap:
    """``mu(s) = s + (1 - 2 eps) W((s - eps) / eps)`` on ``[0, 2 eps]``.

    ``W`` is the exponential smooth step, so ``mu`` is the identity on
    ``[0, eps]``, ``mu(2 eps) = 1`` and ``mu' >= 1``.
    """

    eps: float

    def __post_init__(self):
        if not (0 < self.eps <= 0.5):
            raise ValueError("collar parameter must lie in (0, 1/2]")

    def mu(self, s):
        s = np.asarray(s, dtype=float)
        return s + (1 - 2 * self.eps) * smooth_step((s - self.eps) / self.eps)

    def mu_inv(self, v, xtol: float = 1e-12):
        """Inverse of ``mu`` by vectorized bisection on ``[eps, 2 eps]``."""
        v = np.asarray(v, dtype=float)
        out = v.copy()
        hi_mask = v > self.eps
        if np.any(v > 1 + 1e-12) or np.any(v < 0):
            raise PsiInverseFailure("level outside [0, 1]")
        lo = np.full(v.shape, self.eps)
        hi = np.full(v.shape, 2 * self.eps)
        while np.max(hi - lo) > xtol:
            mid = 0.5 * (lo + hi)
            below = self.mu(mid) < v
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out[hi_mask] = 0.5 * (lo + hi)[hi_mask]
        return out


def _transport(intspec: IntegralSpec, Z: np.ndarray, targets: np.ndarray, tol: float) -> np.ndarray:
    """Move each row along ``grad f_hat / |grad f_hat|^2`` until ``f_hat`` hits its target."""
    if len(Z) == 0:
        return Z
    fh = intspec.f_hat
    ev = fh.evaluator()
    gx_ev, gy_ev = fh.diff("x").evaluator(), fh.diff("y").evaluator()
    delta = (targets - ev(Z[:, 0], Z[:, 1]))[:, None]

    def grad(P):
        gx, gy = gx_ev(P[:, 0], P[:, 1]), gy_ev(P[:, 0], P[:, 1])
        n2 = gx * gx + gy * gy
        if np.any(n2 == 0):
            raise GradientVanishes("gradient of the integral vanishes on the transport path")
        return np.column_stack([gx / n2, gy / n2])

    P = solve(lambda s, P: delta * grad(P), Z, 0.0, 1.0, tol)
    for _ in range(3):
        r = targets - ev(P[:, 0], P[:, 1])
        P = P + r[:, None] * grad(P)
    return P


def collar_psi(intspec: IntegralSpec, collar: CollarMap, z, tol: float = 1e-12) -> np.ndarray:
    """``psi`` with ``f_hat o psi = mu o f_hat``; the identity on ``U_eps``."""
    Z = np.array(z, dtype=float)
    single = Z.ndim == 1
    Z = Z.reshape(-1, 2)
    s = intspec(Z[:, 0], Z[:, 1])
    if np.any(s > 2 * collar.eps * (1 + 1e-12)):
        raise ValueError("collar_psi is defined on U_{2 eps} only")
    out = Z.copy()
    move = s > collar.eps
    out[move] = _transport(intspec, Z[move], collar.mu(s[move]), tol)
    return out[0] if single else out


def collar_psi_inv(intspec: IntegralSpec, collar: CollarMap, w, tol: float = 1e-12) -> np.ndarray:
    W = np.array(w, dtype=float)
    single = W.ndim == 1
    W = W.reshape(-1, 2)
    v = intspec(W[:, 0], W[:, 1])
    if np.any(v > 1 + 1e-9):
        raise PsiInverseFailure("point outside V")
    v = np.minimum(v, 1.0)
    out = W.copy()
    move = v > collar.eps
    if np.any(move):
        out[move] = _transport(intspec, W[move], collar.mu_inv(v[move]), tol)
    return out[0] if single else out


@dataclass(frozen=True)
class DiffeoCheck:
    ue_deviation: float
    level_drift: float
    min_jacobian: float
    orbit_order_ok: bool

    def to_json(self) -> dict:
        return {
            "ue_deviation": self.ue_deviation,
            "level_drift": self.level_drift,
            "min_jacobian_det": self.min_jacobian,
            "orbit_order_ok": self.orbit_order_ok,
        }


def change_to_diffeo(fs: FieldSpec, intspec: IntegralSpec, m: MapSpec, eps: float, tol: float = 1e-10) -> MapSpec:
    """``g = psi o m o psi^-1`` as a composite evaluator; ``g = m`` on ``U_eps``."""
    collar = CollarMap(eps)

    def g(Z):
        Z = np.asarray(Z, dtype=float).reshape(-1, 2)
        P = collar_psi_inv(intspec, collar, Z)
        Q = apply_map(m, P, fs, tol)
        # m preserves levels, so m(P) stays in U_{2 eps} up to drift
        s = intspec(Q[:, 0], Q[:, 1])
        over = s > 2 * eps
        if np.any(over):
            if np.max(s[over]) > 2 * eps + 1e-6:
                raise PsiInverseFailure("m leaves U_{2 eps}")
            Q[over] = _transport(intspec, Q[over], np.full(int(over.sum()), 2 * eps), 1e-12)
        return collar_psi(intspec, collar, Q)

    return MapSpec((CallableMap(g, f"collar({m.name})"),), f"g({m.name})")


def jacobian_dets(m: MapSpec, Z, fs: FieldSpec | None = None, h: float = 1e-6, tol: float = 1e-10) -> np.ndarray:
    """Central-difference Jacobian determinants of ``m`` at the rows of ``Z``."""
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    n = len(Z)
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    S = np.concatenate([Z + ex, Z - ex, Z + ey, Z - ey])
    W = apply_map(m, S, fs, tol)
    dx = (W[:n] - W[n:2 * n]) / (2 * h)
    dy = (W[2 * n:3 * n] - W[3 * n:]) / (2 * h)
    return dx[:, 0] * dy[:, 1] - dx[:, 1] * dy[:, 0]


def orbit_order_preserved(images: np.ndarray) -> bool:
    """Images of counter-clockwise ordered nodes of one star-shaped orbit keep cyclic order."""
    ang = np.arctan2(images[:, 1], images[:, 0])
    steps = (np.diff(np.append(ang, ang[0])) + math.pi) % (2 * math.pi) - math.pi
    return bool(np.all(steps > 0) and abs(steps.sum() - 2 * math.pi) < 1e-6)


def check_diffeo(fs: FieldSpec, intspec: IntegralSpec, m: MapSpec, g: MapSpec, eps: float, grid: ShiftGrid, samples, tol: float = 1e-10) -> DiffeoCheck:
    Z = grid.flat()
    G = apply_map(g, Z, fs, tol)
    drift = float(np.max(np.abs(intspec(G[:, 0], G[:, 1]) - intspec(Z[:, 0], Z[:, 1]))))
    inner = Z[intspec(Z[:, 0], Z[:, 1]) <= eps]
    dev = 0.0
    if len(inner):
        dev = float(np.max(np.hypot(*(apply_map(g, inner, fs, tol) - apply_map(m, inner, fs, tol)).T)))
    order = all(orbit_order_preserved(G.reshape(grid.shape + (2,))[i]) for i in range(grid.shape[0]))
    dets = jacobian_dets(g, samples, fs, tol=tol)
    return DiffeoCheck(dev, drift, float(np.min(dets)), order)
