"""Polar-strip covering ``P(phi, rho) = (rho cos phi, rho sin phi)`` and lifts through it."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import FieldSpec
from .flow import check_tol
from .integrate import Dopri5

TWO_PI = 2 * math.pi


class SamplesTooCoarse(ValueError):
    """Consecutive samples turn by pi or more; the unwrap is ambiguous."""


class NotClosed(ValueError):
    pass


class AmbiguousWinding(ValueError):
    pass


@dataclass(frozen=True)
class StripPoint:
    phi: float
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("strip points need rho > 0")


@dataclass(frozen=True)
class LiftedPath:
    params: np.ndarray
    phi: np.ndarray
    rho: np.ndarray

    def __len__(self):
        return len(self.phi)

    def __getitem__(self, i) -> StripPoint:
        return StripPoint(float(self.phi[i]), float(self.rho[i]))

    def project(self) -> np.ndarray:
        return np.column_stack([self.rho * np.cos(self.phi), self.rho * np.sin(self.phi)])


def project(sp: StripPoint) -> np.ndarray:
    return np.array([sp.rho * math.cos(sp.phi), sp.rho * math.sin(sp.phi)])


def deck(sp: StripPoint, n: int = 1) -> StripPoint:
    """The covering transformation ``phi -> phi + 2*pi*n``."""
    return StripPoint(sp.phi + TWO_PI * n, sp.rho)


def unwrap_angles(angles, phi0: float) -> np.ndarray:
    """Continuous lift of wrapped ``angles`` starting at ``phi0``.

    ``phi0`` must agree with ``angles[0]`` modulo ``2*pi``.
    """
    a = np.asarray(angles, dtype=float)
    if a.size == 0:
        return a
    d = np.diff(a)
    step = (d + math.pi) % TWO_PI - math.pi
    if np.any(np.abs(step) >= math.pi - 1e-12):
        i = int(np.argmax(np.abs(step) >= math.pi - 1e-12))
        raise SamplesTooCoarse(f"angular jump of {step[i]:.6g} rad between samples {i} and {i + 1}")
    off = (phi0 - a[0] + math.pi) % TWO_PI - math.pi
    if abs(off) > 1e-9:
        raise ValueError("phi0 does not project to the initial angle")
    phi = np.empty_like(a)
    phi[0] = phi0
    phi[1:] = phi0 + np.cumsum(step)
    return phi


def lift_path(path, phi0: float | None = None) -> LiftedPath:
    """Lift a sampled plane path avoiding O through the covering."""
    pts = np.asarray(path, dtype=float).reshape(-1, 2)
    rho = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(rho == 0):
        raise ValueError("path passes through the origin")
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    if phi0 is None:
        phi0 = float(ang[0])
    phi = unwrap_angles(ang, phi0)
    return LiftedPath(np.arange(len(pts), dtype=float), phi, rho)


def lifted_flow(fs: FieldSpec, sp: StripPoint, t: float, tol: float = 1e-10) -> StripPoint:
    """Integrate the flow downstairs from ``P(sp)`` and unwrap the angle on the way."""
    check_tol(tol)
    if t == 0:
        return sp
    z = project(sp)
    st = Dopri5(fs.rhs(), 0.0, z, float(t), tol)
    phi = sp.phi
    prev = math.atan2(z[1], z[0])
    while st.step():
        seg = st.segment
        for s in (0.25, 0.5, 0.75, 1.0):
            p = seg(seg.t0 + s * seg.h)
            a = math.atan2(p[1], p[0])
            inc = (a - prev + math.pi) % TWO_PI - math.pi
            if abs(inc) >= math.pi / 2:
                raise SamplesTooCoarse("integration step turns too far to unwrap")
            phi += inc
            prev = a
    # snap to the exact end-point angle (dense output vs. step end)
    a = math.atan2(st.y[1], st.y[0])
    phi += (a - prev + math.pi) % TWO_PI - math.pi
    return StripPoint(phi, float(np.hypot(*st.y)))


def winding_of_loop(loop, close_tol: float = 1e-8, margin: float = 0.25) -> int:
    """Winding number about O of a closed sampled loop."""
    pts = np.asarray(loop, dtype=float).reshape(-1, 2)
    if np.hypot(*(pts[-1] - pts[0])) > close_tol:
        raise NotClosed(f"loop end is {np.hypot(*(pts[-1] - pts[0])):.3e} from its start")
    lp = lift_path(pts)
    w = (lp.phi[-1] - lp.phi[0]) / TWO_PI
    n = round(w)
    if 0.5 - abs(w - n) < margin:
        raise AmbiguousWinding(f"winding {w:.6f} too far from an integer")
    return int(n)
