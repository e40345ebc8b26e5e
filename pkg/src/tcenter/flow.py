"""Flow of a FieldSpec, orbit sampling and the period function."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .field import CenterCase, FieldSpec, IntegralSpec, level_point
from .integrate import Dopri5, IntegrationError, LeftDomain, StepUnderflow, solve

__all__ = [
    "LeftDomain",
    "NearOrigin",
    "NoReturn",
    "OrbitClock",
    "PeriodSample",
    "StepUnderflow",
    "Trajectory",
    "blowup_consistent",
    "flow",
    "flow_many",
    "orbit_clock",
    "orbit_samples",
    "period",
    "period_blowup_check",
    "trajectory",
]

TOL_RANGE = (1e-12, 1e-3)
MIN_RADIUS = 1e-6
TWO_PI = 2 * math.pi


class NoReturn(IntegrationError):
    """The orbit did not come back to its ray within the budget."""


class NearOrigin(ValueError):
    """Point closer to the singularity than the configured radius."""


def check_tol(tol: float) -> float:
    if not (TOL_RANGE[0] <= tol <= TOL_RANGE[1]):
        raise ValueError(f"tol={tol!r} outside supported range {TOL_RANGE}")
    return float(tol)


def _wrap(a):
    """Wrap angles to ``[-pi, pi)``."""
    return (np.asarray(a) + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class PeriodSample:
    z: tuple[float, float]
    theta: float
    level: float
    residual: float


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    field: str
    closure_residual: float = float("nan")

    def rows(self):
        for t, (x, y) in zip(self.times, self.points):
            yield float(t), float(x), float(y)


def flow(fs: FieldSpec, z, t: float, tol: float = 1e-10) -> np.ndarray:
    """``Phi(z, t)``; the origin and ``t = 0`` short-circuit exactly."""
    check_tol(tol)
    z = np.array(z, dtype=float)
    if t == 0 or (z[0] == 0 and z[1] == 0):
        return z
    return solve(fs.rhs(), z, 0.0, float(t), tol)


def flow_many(fs: FieldSpec, Z, T, tol: float = 1e-10) -> np.ndarray:
    """``Phi(Z[i], T[i])`` for a batch, integrated together in rescaled time.

    Each row follows ``dz/ds = T[i] * F(z)`` for ``s`` in ``[0, 1]``.
    """
    check_tol(tol)
    Z = np.array(Z, dtype=float).reshape(-1, 2)
    T = np.broadcast_to(np.asarray(T, dtype=float), (len(Z),))
    out = Z.copy()
    live = (T != 0) & np.any(Z != 0, axis=1)
    if not np.any(live):
        return out
    Tl = T[live][:, None]
    base = fs.rhs()
    rhs = lambda s, z: Tl * base(s, z)
    out[live] = solve(rhs, Z[live], 0.0, 1.0, tol)
    return out


class OrbitClock:
    """Time coordinate along one closed orbit, from one period of dense output.

    The winding coordinate ``w`` grows from 0 to ``2*pi`` in the direction of
    motion; :meth:`time_of_winding` inverts it.
    """

    def __init__(self, fs: FieldSpec, z0, tol: float = 1e-10, max_steps: int = 100_000):
        check_tol(tol)
        self.fs = fs
        self.tol = tol
        self.z0 = np.array(z0, dtype=float)
        self.phi0 = math.atan2(self.z0[1], self.z0[0])
        omega0 = float(fs.angular_speed(self.z0[0], self.z0[1]))
        if omega0 == 0 or not math.isfinite(omega0):
            raise NoReturn(f"no rotation at {tuple(self.z0)}")
        self.sign = 1.0 if omega0 > 0 else -1.0
        self._segments = []
        self._w_starts: list[float] = []
        self._integrate(max_steps)

    def _wind_in(self, seg, t):
        p = seg(t)
        a0 = math.atan2(seg.r1[1], seg.r1[0])
        return self.sign * float(_wrap(math.atan2(p[1], p[0]) - a0))

    def _integrate(self, max_steps):
        fs = self.fs
        rhs = fs.rhs()
        # open-ended: the stepper is stopped by the crossing test
        st = Dopri5(rhs, 0.0, self.z0, math.inf, self.tol, max_steps=max_steps)
        st.h_min = 1e-14 * self._timescale()
        w = 0.0
        while True:
            try:
                st.step()
            except IntegrationError as exc:
                if isinstance(exc, (StepUnderflow, LeftDomain)):
                    raise
                raise NoReturn(f"no return to the ray within {max_steps} steps") from exc
            seg = st.segment
            dw = 0.0
            prev = seg.r1
            for s in (0.25, 0.5, 0.75, 1.0):
                p = seg(seg.t0 + s * seg.h)
                inc = self.sign * float(_wrap(math.atan2(p[1], p[0]) - math.atan2(prev[1], prev[0])))
                if abs(inc) >= math.pi / 2:
                    raise IntegrationError("angular step too large for unambiguous unwrapping")
                dw += inc
                prev = p
            if abs(dw) >= math.pi:
                raise IntegrationError("angular step too large for unambiguous unwrapping")
            w1 = w + dw
            self._segments.append((seg, w, w1))
            self._w_starts.append(w)
            if w1 >= TWO_PI:
                t_cross = brentq(lambda t: w + self._wind_in(seg, t) - TWO_PI, seg.t0, seg.t1, xtol=1e-15, rtol=1e-15)
                self.theta = self._refine_period(t_cross, seg.t0, seg.r1)
                break
            if w1 < -math.pi:
                raise NoReturn("orbit turned back; not a rotation about O")
            w = w1

    def _timescale(self) -> float:
        om = abs(float(self.fs.angular_speed(self.z0[0], self.z0[1])))
        return TWO_PI / om

    def _refine_period(self, t, t_start, y_start) -> float:
        """Newton on the crossing time with fresh integrations from the last step."""
        rhs = self.fs.rhs()
        for _ in range(4):
            p = solve(rhs, y_start, t_start, t, self.tol)
            r = float(_wrap(math.atan2(p[1], p[0]) - self.phi0))
            om = float(self.fs.angular_speed(p[0], p[1]))
            dt = -r / om
            t += dt
            if abs(dt) <= 1e-15 * t:
                break
        self.end_point = solve(rhs, y_start, t_start, t, self.tol)
        return t

    @property
    def residual(self) -> float:
        return float(np.hypot(*(self.end_point - self.z0)))

    def time_of_winding(self, w: float) -> float:
        """Flow time from ``z0`` to winding ``w`` (any real; periodic extension)."""
        n = math.floor(w / TWO_PI)
        w0 = w - n * TWO_PI
        i = max(0, bisect.bisect_right(self._w_starts, w0) - 1)
        seg, wa, wb = self._segments[i]
        if w0 <= wa:
            t = seg.t0
        elif w0 >= wb:
            t = min(seg.t1, self.theta)
        else:
            t = brentq(lambda t: wa + self._wind_in(seg, t) - w0, seg.t0, seg.t1, xtol=1e-15, rtol=1e-15)
        return t + n * self.theta

    def winding_of_angle(self, angle: float) -> float:
        """Winding coordinate in ``[0, 2*pi)`` of a point at polar ``angle`` on this orbit."""
        return float((self.sign * (angle - self.phi0)) % TWO_PI)

    def time_of_point(self, p) -> float:
        """Time in ``[0, theta)`` from ``z0`` to the orbit point with the angle of ``p``."""
        return self.time_of_winding(self.winding_of_angle(math.atan2(p[1], p[0])))

    def point_at(self, t: float) -> np.ndarray:
        t = t % self.theta
        ts = [s.t0 for s, _, _ in self._segments]
        i = max(0, bisect.bisect_right(ts, t) - 1)
        return self._segments[i][0](t)


def orbit_clock(fs: FieldSpec, z, tol: float = 1e-10, min_radius: float = MIN_RADIUS) -> OrbitClock:
    z = np.asarray(z, dtype=float)
    if np.hypot(*z) < min_radius:
        raise NearOrigin(f"|z| < {min_radius}")
    return OrbitClock(fs, z, tol)


def period(fs: FieldSpec, intspec: IntegralSpec | None, z, tol: float = 1e-10, min_radius: float = MIN_RADIUS) -> PeriodSample:
    """Smallest ``t > 0`` with ``Phi(z, t) = z``, via the first same-direction
    crossing of the ray from O through ``z``."""
    clock = orbit_clock(fs, z, tol, min_radius)
    z = clock.z0
    level = float(intspec(z[0], z[1])) if intspec is not None else float("nan")
    return PeriodSample((float(z[0]), float(z[1])), clock.theta, level, clock.residual)


def orbit_samples(fs: FieldSpec, z, n: int, tol: float = 1e-10) -> Trajectory:
    """``n`` points at times ``k * theta / n``, ``k = 0..n-1``."""
    clock = orbit_clock(fs, z, tol)
    times = np.arange(n) * clock.theta / n
    pts = np.array([flow(fs, clock.z0, t, tol) for t in times])
    return Trajectory(times, pts, fs.name, clock.residual)


def trajectory(fs: FieldSpec, z, t_end: float, n: int, tol: float = 1e-10) -> Trajectory:
    """Samples at ``n + 1`` equally spaced times in ``[0, t_end]`` from dense output."""
    check_tol(tol)
    z = np.array(z, dtype=float)
    times = np.linspace(0.0, t_end, n + 1)
    pts = np.empty((n + 1, 2))
    pts[0] = z
    if t_end == 0 or not np.any(z):
        pts[:] = z
        return Trajectory(times, pts, fs.name)
    st = Dopri5(fs.rhs(), 0.0, z, t_end, tol)
    k = 1
    d = st.direction
    while k <= n:
        if not st.step():
            break
        seg = st.segment
        while k <= n and d * (times[k] - seg.t1) <= 0:
            pts[k] = seg(times[k])
            k += 1
    pts[-1] = st.y
    return Trajectory(times, pts, fs.name)


def period_blowup_check(fs: FieldSpec, intspec: IntegralSpec, ray_angle: float, levels, tol: float = 1e-10) -> list[PeriodSample]:
    """Periods at the points of the ray with the given ``f_hat`` levels."""
    out = []
    for c in levels:
        if not (0 < c <= 1):
            raise ValueError(f"level {c} outside (0, 1]")
        out.append(period(fs, intspec, level_point(intspec, c, ray_angle), tol))
    return out


def blowup_consistent(case: CenterCase, samples: list[PeriodSample], band: float = 0.5) -> bool:
    """Degenerate cases: periods strictly increase as the level decreases.
    Non-degenerate case: relative spread ``(max - min) / mean`` stays within ``band``."""
    order = sorted(samples, key=lambda s: -s.level)
    th = [s.theta for s in order]
    if case.degenerate:
        return all(b > a for a, b in zip(th, th[1:]))
    mean = sum(th) / len(th)
    return (max(th) - min(th)) <= band * mean
