"""Shift maps ``Sh(alpha)(z) = Phi(z, alpha(z))`` and recovery of shift functions.

Maps are compositions of primitives (flow shifts, linear maps, polynomial
maps). Recovery works on a (level, angle) grid: each level is one orbit, timed
by an :class:`~tcenter.flow.OrbitClock`; the mod-period ambiguity is resolved
by propagating branches from an anchor node across the grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .expr import Poly2, parse_poly
from .field import FieldSpec, IntegralSpec, level_point
from .flow import OrbitClock, check_tol, flow_many

TWO_PI = 2 * math.pi


class NotOrbitPreserving(ValueError):
    pass


class BranchConflict(ArithmeticError):
    """Branch propagation found a jump that no choice of period multiple removes."""


class AnchorInconsistent(ValueError):
    pass


class NotMultiple(ArithmeticError):
    pass


class InverseNotResolvable(ArithmeticError):
    pass


class MapSpecError(ValueError):
    pass


Scalar = Union[Poly2, str, float, int, Fraction, Callable]


def scalar_fn(alpha: Scalar) -> Callable:
    """Vectorized ``(x, y) -> float array`` from an expression, number or callable."""
    if isinstance(alpha, str):
        alpha = parse_poly(alpha)
    if isinstance(alpha, Poly2):
        ev = alpha.evaluator()
        return lambda x, y: np.asarray(ev(x, y), dtype=float) + 0.0 * np.asarray(x, dtype=float)
    if isinstance(alpha, (int, float, Fraction)):
        c = float(alpha)
        return lambda x, y: np.full(np.shape(x), c)
    if callable(alpha):
        return alpha
    raise TypeError(f"cannot use {alpha!r} as a scalar function")


# -- map primitives -------------------------------------------------------------

@dataclass(frozen=True)
class FlowShift:
    alpha: Scalar
    label: str = ""

    def __post_init__(self):
        if isinstance(self.alpha, str):
            object.__setattr__(self, "alpha", parse_poly(self.alpha))
        elif isinstance(self.alpha, (int, float, Fraction)) and not isinstance(self.alpha, bool):
            object.__setattr__(self, "alpha", Poly2.const(Fraction(self.alpha)))

    def shift(self, Z: np.ndarray) -> np.ndarray:
        return scalar_fn(self.alpha)(Z[:, 0], Z[:, 1])

    def __call__(self, Z, fs: FieldSpec, tol: float) -> np.ndarray:
        return flow_many(fs, Z, self.shift(Z), tol)

    def to_json(self):
        if not isinstance(self.alpha, Poly2):
            raise MapSpecError("only polynomial shift functions serialize")
        return {"kind": "flow_shift", "alpha": str(self.alpha)}


@dataclass(frozen=True)
class LinearMap:
    m: tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]

    def __post_init__(self):
        rows = tuple(tuple(Fraction(str(v)) if isinstance(v, str) else Fraction(v) for v in r) for r in self.m)
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise MapSpecError("linear maps need a 2x2 matrix")
        if rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0] == 0:
            raise MapSpecError("linear map is singular")
        object.__setattr__(self, "m", rows)

    def __call__(self, Z, fs=None, tol=None) -> np.ndarray:
        A = np.array([[float(v) for v in r] for r in self.m])
        return Z @ A.T

    def to_json(self):
        return {"kind": "linear", "m": [[str(v) for v in r] for r in self.m]}


@dataclass(frozen=True)
class PolyMap:
    h1: Poly2
    h2: Poly2

    def __post_init__(self):
        for name in ("h1", "h2"):
            v = getattr(self, name)
            if isinstance(v, str):
                object.__setattr__(self, name, parse_poly(v))
        if self.h1.at_origin() != 0 or self.h2.at_origin() != 0:
            raise MapSpecError("polynomial maps must fix the origin")
        a, b = self.h1.coeff(1, 0), self.h1.coeff(0, 1)
        c, d = self.h2.coeff(1, 0), self.h2.coeff(0, 1)
        if a * d - b * c == 0:
            raise MapSpecError("polynomial map is not a local diffeomorphism at the origin")

    def __call__(self, Z, fs=None, tol=None) -> np.ndarray:
        x, y = Z[:, 0], Z[:, 1]
        return np.column_stack([scalar_fn(self.h1)(x, y), scalar_fn(self.h2)(x, y)])

    def to_json(self):
        return {"kind": "poly", "h1": str(self.h1), "h2": str(self.h2)}


@dataclass(frozen=True)
class CallableMap:
    """Opaque batch evaluator ``(n, 2) -> (n, 2)``, e.g. a conjugated map."""

    fn: Callable
    label: str = "callable"

    def __call__(self, Z, fs=None, tol=None) -> np.ndarray:
        return np.asarray(self.fn(Z), dtype=float).reshape(-1, 2)

    def to_json(self):
        raise MapSpecError("callable maps do not serialize")


Primitive = Union[FlowShift, LinearMap, PolyMap, CallableMap]


@dataclass(frozen=True)
class MapSpec:
    """Composition of primitives, applied in list order (first element first)."""

    primitives: tuple = ()
    name: str = "map"

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))

    @classmethod
    def identity(cls) -> "MapSpec":
        return cls((), "identity")

    @classmethod
    def flow_shift(cls, alpha: Scalar, name: str = "flow_shift") -> "MapSpec":
        return cls((FlowShift(alpha),), name)

    def then(self, other: "MapSpec") -> "MapSpec":
        """``other o self``: apply ``self`` first."""
        return MapSpec(self.primitives + other.primitives, f"{other.name}*{self.name}")

    @property
    def needs_field(self) -> bool:
        return any(isinstance(p, FlowShift) for p in self.primitives)

    def to_json(self) -> dict:
        return {"name": self.name, "primitives": [p.to_json() for p in self.primitives]}

    @classmethod
    def from_json(cls, data) -> "MapSpec":
        if isinstance(data, list):
            data = {"primitives": data}
        prims = []
        for item in data.get("primitives", []):
            kind = item.get("kind")
            if kind == "flow_shift":
                prims.append(FlowShift(parse_poly(str(item["alpha"]))))
            elif kind == "linear":
                prims.append(LinearMap(item["m"]))
            elif kind == "poly":
                prims.append(PolyMap(parse_poly(item["h1"]), parse_poly(item["h2"])))
            else:
                raise MapSpecError(f"unknown primitive kind {kind!r}")
        return cls(tuple(prims), data.get("name", "map"))

    @classmethod
    def load(cls, path) -> "MapSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def apply_map(m: MapSpec, z, fs: FieldSpec | None = None, tol: float = 1e-10) -> np.ndarray:
    """Evaluate ``m`` at a point ``(2,)`` or a batch ``(n, 2)``."""
    Z = np.array(z, dtype=float)
    single = Z.ndim == 1
    Z = Z.reshape(-1, 2)
    if m.needs_field and fs is None:
        raise MapSpecError("flow shifts need a field")
    for p in m.primitives:
        Z = p(Z, fs, tol)
    return Z[0] if single else Z


def shift_of(fs: FieldSpec, alpha: Scalar, z, tol: float = 1e-10) -> np.ndarray:
    """``Sh(alpha)(z) = Phi(z, alpha(z))``."""
    return apply_map(MapSpec.flow_shift(alpha), z, fs, tol)


# -- recovery ---------------------------------------------------------------------

class ShiftGrid:
    """(level, angle) lattice over ``V \\ {O}`` with one orbit clock per level.

    Building the clocks dominates the cost of a recovery, so a grid can be
    reused for any number of maps on the same field.
    """

    def __init__(
        self,
        fs: FieldSpec,
        intspec: IntegralSpec,
        n_levels: int = 32,
        n_angles: int = 32,
        tol: float = 1e-10,
        levels: Sequence[float] | None = None,
        min_level: float | None = None,
    ):
        check_tol(tol)
        if levels is None:
            levels = np.arange(1, n_levels + 1) / n_levels
        levels = np.asarray(levels, dtype=float)
        if min_level is None and fs.case.degenerate:
            min_level = 1e-3
        if min_level is not None:
            levels = np.maximum(levels, min_level)
        if np.any(levels <= 0) or np.any(levels > 1) or np.any(np.diff(levels) <= 0):
            raise ValueError("levels must increase within (0, 1]")
        self.fs, self.intspec, self.tol = fs, intspec, tol
        self.levels = levels
        self.angles = TWO_PI * np.arange(n_angles) / n_angles
        L, A = len(levels), n_angles
        self.points = np.empty((L, A, 2))
        for i, c in enumerate(levels):
            for j, a in enumerate(self.angles):
                self.points[i, j] = level_point(intspec, c, a)
        self.clocks = [OrbitClock(fs, self.points[i, 0], tol) for i in range(L)]
        self.theta = np.array([c.theta for c in self.clocks])
        self.node_times = np.array([[clk.time_of_point(p) for p in self.points[i]] for i, clk in enumerate(self.clocks)])

    @property
    def shape(self) -> tuple[int, int]:
        return self.points.shape[:2]

    def flat(self) -> np.ndarray:
        return self.points.reshape(-1, 2)

    def nearest_node(self, z) -> tuple[int, int]:
        c = float(self.intspec(z[0], z[1]))
        a = math.atan2(z[1], z[0]) % TWO_PI
        i = int(np.argmin(np.abs(self.levels - c)))
        d = np.abs(((self.angles - a) + math.pi) % TWO_PI - math.pi)
        return i, int(np.argmin(d))


@dataclass(frozen=True)
class ShiftFunctionSample:
    """Values of a shift function on the nodes of a :class:`ShiftGrid`."""

    field: str
    levels: np.ndarray
    angles: np.ndarray
    points: np.ndarray
    values: np.ndarray
    theta: np.ndarray
    anchor: tuple[int, int] = (0, 0)
    residual: float = float("nan")
    _spline: list = field(default_factory=list, repr=False, compare=False)

    def rows(self):
        for i, c in enumerate(self.levels):
            for j, a in enumerate(self.angles):
                yield float(c), float(a), float(self.values[i, j])

    def to_csv(self) -> str:
        lines = ["level,angle,lambda"]
        lines += ["%.17g,%.17g,%.17g" % r for r in self.rows()]
        return "\n".join(lines) + "\n"

    def with_values(self, values) -> "ShiftFunctionSample":
        return ShiftFunctionSample(self.field, self.levels, self.angles, self.points, np.asarray(values, float), self.theta, self.anchor, self.residual)

    def interpolator(self, intspec: IntegralSpec) -> Callable:
        """Bicubic interpolant in (level, angle); approximate off the nodes."""
        if not self._spline:
            pad = 3
            ang = np.concatenate([self.angles[-pad:] - TWO_PI, self.angles, self.angles[:pad] + TWO_PI])
            vals = np.concatenate([self.values[:, -pad:], self.values, self.values[:, :pad]], axis=1)
            kx = min(3, len(self.levels) - 1)
            self._spline.append(RectBivariateSpline(self.levels, ang, vals, kx=kx, ky=3))
        spl = self._spline[0]
        lo, hi = float(self.levels[0]), float(self.levels[-1])

        def lam(x, y):
            c = np.clip(np.asarray(intspec(x, y), dtype=float), lo, hi)
            a = np.mod(np.arctan2(y, x), TWO_PI)
            return spl.ev(c, a)

        return lam


def _nearest_branch(raw, target, theta):
    return raw + np.round((target - raw) / theta) * theta


def recover_shift(
    fs: FieldSpec,
    intspec: IntegralSpec,
    m: MapSpec,
    anchor: tuple | None = None,
    n_levels: int = 32,
    n_angles: int = 32,
    tol: float = 1e-10,
    orbit_tol: float = 1e-7,
    grid: ShiftGrid | None = None,
    polish: bool = True,
) -> ShiftFunctionSample:
    """Grid values of a shift function ``Lambda`` with ``Phi(z, Lambda(z)) = m(z)``.

    ``anchor = (z0, t0)`` selects the branch whose value near ``z0`` is closest
    to ``t0``; without an anchor the value at the outermost node on angle 0 is
    taken in ``(-theta/2, theta/2]``. ``polish`` adds one Newton step along
    the orbit on top of the clock times.
    """
    if grid is None:
        grid = ShiftGrid(fs, intspec, n_levels, n_angles, tol)
    L, A = grid.shape
    Z = grid.flat()
    W = apply_map(m, Z, fs, tol)
    drift = np.abs(intspec(W[:, 0], W[:, 1]) - intspec(Z[:, 0], Z[:, 1]))
    if not np.all(np.isfinite(drift)) or np.max(drift) > orbit_tol:
        k = int(np.nanargmax(np.where(np.isfinite(drift), drift, np.inf)))
        raise NotOrbitPreserving(f"level drift {drift[k]:.3e} at node ({Z[k, 0]:.6g}, {Z[k, 1]:.6g})")
    W = W.reshape(L, A, 2)

    theta = grid.theta
    raw = np.empty((L, A))
    for i, clk in enumerate(grid.clocks):
        raw[i] = [clk.time_of_point(w) for w in W[i]]
    raw = np.mod(raw - grid.node_times, theta[:, None])

    if anchor is None:
        i0, j0 = L - 1, 0
        v0 = raw[i0, j0]
        v0 = v0 - theta[i0] if v0 > theta[i0] / 2 else v0
    else:
        z0, t0 = np.asarray(anchor[0], float), float(anchor[1])
        mz0 = apply_map(m, z0, fs, tol)
        hit = flow_many(fs, z0[None], [t0], tol)[0]
        if np.hypot(*(hit - mz0)) > orbit_tol:
            raise AnchorInconsistent(f"Phi(z0, t0) misses m(z0) by {np.hypot(*(hit - mz0)):.3e}")
        i0, j0 = grid.nearest_node(z0)
        v0 = _nearest_branch(raw[i0, j0], t0, theta[i0])

    vals = np.full((L, A), np.nan)
    vals[i0, j0] = v0
    _sweep_level(vals, raw, theta, i0, j0)
    for order in (range(i0 + 1, L), range(i0 - 1, -1, -1)):
        prev = i0
        for i in order:
            vals[i] = _nearest_branch(raw[i], vals[prev], theta[i])
            _check_level(vals, theta, i)
            prev = i

    # Newton polish along the orbit, then the realized residual
    flat = vals.reshape(-1)
    Wf = W.reshape(-1, 2)
    P = flow_many(fs, Z, flat, tol)
    if polish:
        Fx, Fy = fs(P[:, 0], P[:, 1])
        flat = flat + ((Wf[:, 0] - P[:, 0]) * Fx + (Wf[:, 1] - P[:, 1]) * Fy) / (Fx * Fx + Fy * Fy)
        P = flow_many(fs, Z, flat, tol)
    res = float(np.max(np.hypot(*(P - Wf).T)))
    return ShiftFunctionSample(fs.name, grid.levels, grid.angles, grid.points, flat.reshape(L, A), theta, (i0, j0), res)


def _sweep_level(vals, raw, theta, i, j0):
    A = vals.shape[1]
    th = theta[i]
    for s in range(1, A):
        j, jp = (j0 + s) % A, (j0 + s - 1) % A
        vals[i, j] = _nearest_branch(raw[i, j], vals[i, jp], th)
    _check_level(vals, theta, i)


def _check_level(vals, theta, i):
    row = vals[i]
    jumps = np.abs(np.diff(np.append(row, row[0])))
    k = int(np.argmax(jumps))
    if jumps[k] >= 0.45 * theta[i]:
        raise BranchConflict(f"jump {jumps[k]:.6g} (theta {theta[i]:.6g}) on level index {i} near angle index {k}")


def branch_difference(s1: ShiftFunctionSample, s2: ShiftFunctionSample, tol: float = 1e-6) -> int:
    """The integer ``n`` with ``s1 - s2 = n * theta`` at every node."""
    if s1.values.shape != s2.values.shape or not np.allclose(s1.levels, s2.levels):
        raise ValueError("samples live on different grids")
    q = (s1.values - s2.values) / s1.theta[:, None]
    n = np.round(q)
    if np.max(np.abs(q - n)) > tol or np.any(n != n.flat[0]):
        raise NotMultiple(f"difference is not a common multiple of the period (spread {np.max(np.abs(q - n)):.3e})")
    return int(n.flat[0])


# -- composition algebra ---------------------------------------------------------------

def compose_shift(fs: FieldSpec, alpha_g: Scalar, alpha_h: Scalar, tol: float = 1e-10) -> Callable:
    """``alpha_{g o h} = alpha_g o h + alpha_h`` with ``h = Sh(alpha_h)``."""
    ag, ah = scalar_fn(alpha_g), scalar_fn(alpha_h)

    def alpha(x, y):
        Z = np.column_stack([np.ravel(x), np.ravel(y)]).astype(float)
        a = ah(Z[:, 0], Z[:, 1])
        H = flow_many(fs, Z, a, tol)
        return (ag(H[:, 0], H[:, 1]) + a).reshape(np.shape(x))

    return alpha


def inverse_points(fs: FieldSpec, alpha_k: Scalar, Z, tol: float = 1e-10, max_iter: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """``(k^-1(Z), s)`` with ``k = Sh(alpha_k)`` and ``k^-1(z) = Phi(z, s)``.

    Solves ``s + alpha_k(Phi(z, s)) = 0`` by a batched secant iteration.
    """
    ak = scalar_fn(alpha_k)
    Z = np.array(Z, dtype=float).reshape(-1, 2)
    s0 = np.zeros(len(Z))
    g0 = ak(Z[:, 0], Z[:, 1]) + 0.0
    s1 = -g0
    P1 = flow_many(fs, Z, s1, tol)
    g1 = s1 + ak(P1[:, 0], P1[:, 1])
    for _ in range(max_iter):
        if np.max(np.abs(g1)) <= 1e-13 * max(1.0, float(np.max(np.abs(s1)))):
            return P1, s1
        den = g1 - g0
        safe = np.abs(den) > 1e-300
        s2 = np.where(safe, s1 - g1 * (s1 - s0) / np.where(safe, den, 1.0), s1)
        P1 = flow_many(fs, P1, s2 - s1, tol)
        s0, g0, s1 = s1, g1, s2
        g1 = s1 + ak(P1[:, 0], P1[:, 1])
    if np.max(np.abs(g1)) <= 1e-9:
        return P1, s1
    raise InverseNotResolvable(f"inverse residual {np.max(np.abs(g1)):.3e} after {max_iter} iterations")


def inverse_shift(fs: FieldSpec, alpha_k: Scalar, tol: float = 1e-10) -> Callable:
    """``alpha_{k^-1} = -alpha_k o k^-1``."""

    def alpha(x, y):
        Z = np.column_stack([np.ravel(x), np.ravel(y)])
        _, s = inverse_points(fs, alpha_k, Z, tol)
        return s.reshape(np.shape(x))

    return alpha


def quotient_shift(fs: FieldSpec, alpha_g: Scalar, alpha_k: Scalar, tol: float = 1e-10) -> Callable:
    """``alpha_{g o k^-1} = (alpha_g - alpha_k) o k^-1``."""
    ag, ak = scalar_fn(alpha_g), scalar_fn(alpha_k)

    def alpha(x, y):
        Z = np.column_stack([np.ravel(x), np.ravel(y)])
        P, _ = inverse_points(fs, alpha_k, Z, tol)
        return (ag(P[:, 0], P[:, 1]) - ak(P[:, 0], P[:, 1])).reshape(np.shape(x))

    return alpha


# -- Lie derivative and the local-diffeomorphism criterion --------------------------------

def lie_derivative(fs: FieldSpec, alpha: Scalar, z, step: float = 1e-2, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """``F(alpha)(z)`` by central differences along the flow, Richardson-combined.

    Returns ``(value, error_estimate)``; scalar input gives scalar output.
    """
    a = scalar_fn(alpha)
    Z = np.array(z, dtype=float)
    single = Z.ndim == 1
    Z = Z.reshape(-1, 2)
    n = len(Z)
    hs = np.array([step, -step, step / 2, -step / 2])
    P = flow_many(fs, np.repeat(Z, 4, axis=0), np.tile(hs, n), tol)
    v = a(P[:, 0], P[:, 1]).reshape(n, 4)
    d1 = (v[:, 0] - v[:, 1]) / (2 * step)
    d2 = (v[:, 2] - v[:, 3]) / step
    val = (4 * d2 - d1) / 3
    err = np.abs(d2 - d1) / 3 + 4 * tol / step
    if single:
        return float(val[0]), float(err[0])
    return val, err


def lie_derivative_poly(fs: FieldSpec, alpha: Poly2) -> Poly2:
    """Symbolic ``F1 * alpha_x + F2 * alpha_y``."""
    return fs.F1 * alpha.diff("x") + fs.F2 * alpha.diff("y")


@dataclass(frozen=True)
class DiffeoReport:
    min_value: float
    argmin: tuple[float, float]
    witnesses: tuple[tuple[float, float, float], ...]
    n_samples: int

    @property
    def clean(self) -> bool:
        return not self.witnesses

    def to_json(self) -> dict:
        return {
            "min_lie_derivative": self.min_value,
            "argmin": list(self.argmin),
            "witnesses": [list(w) for w in self.witnesses],
            "n_samples": self.n_samples,
        }


def local_diffeo_report(fs: FieldSpec, alpha: Scalar, points, margin: float = 1e-6, step: float = 1e-2, tol: float = 1e-12) -> DiffeoReport:
    """Scan ``F(alpha)`` over samples; flag those with ``F(alpha) <= -1 + margin``."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    vals, _ = lie_derivative(fs, alpha, P, step, tol)
    k = int(np.argmin(vals))
    bad = np.nonzero(vals <= -1 + margin)[0]
    wit = tuple((float(P[i, 0]), float(P[i, 1]), float(vals[i])) for i in bad)
    return DiffeoReport(float(vals[k]), (float(P[k, 0]), float(P[k, 1])), wit, len(P))
