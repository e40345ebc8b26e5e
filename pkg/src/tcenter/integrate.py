"""Embedded Runge-Kutta 5(4) (Dormand-Prince) with continuous extension.

The stepper works on any array-shaped state. Batches of independent planar
trajectories are integrated together as ``(n, 2)`` arrays sharing one step
size; the error norm is the max over the whole batch.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


class IntegrationError(RuntimeError):
    pass


class StepUnderflow(IntegrationError):
    """Step size fell below the floor (stiffness or a singularity in the path)."""


class LeftDomain(IntegrationError):
    """The state became non-finite or escaped the admissible region."""


# Dormand & Prince (1980) coefficients.
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
# continuous extension (Hairer, Norsett & Wanner, dopri5 "contd5")
D1, D3, D4, D5, D6, D7 = (
    -12715105075 / 11282082432,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)

# Reported tolerances are targets for the end-point error; the per-step
# criterion is tightened by this factor to absorb accumulation.
LOCAL_SAFETY = 0.1
MIN_STEP_REL = 1e-14


class Segment:
    """Dense output on one accepted step ``[t0, t1]``."""

    __slots__ = ("t0", "t1", "h", "r1", "r2", "r3", "r4", "r5")

    def __init__(self, t0, t1, y0, y1, k1, k3, k4, k5, k6, k7):
        h = t1 - t0
        self.t0, self.t1, self.h = t0, t1, h
        ydiff = y1 - y0
        bspl = h * k1 - ydiff
        self.r1 = y0
        self.r2 = ydiff
        self.r3 = bspl
        self.r4 = ydiff - h * k7 - bspl
        self.r5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)

    def __call__(self, t):
        s = (t - self.t0) / self.h
        s1 = 1.0 - s
        return self.r1 + s * (self.r2 + s1 * (self.r3 + s * (self.r4 + s1 * self.r5)))


class Dopri5:
    """Adaptive stepper from ``t0`` towards ``t_end`` (either direction)."""

    def __init__(
        self,
        rhs: Callable,
        t0: float,
        y0,
        t_end: float,
        tol: float,
        max_step: float = math.inf,
        bound: float = 1e8,
        max_steps: int = 200_000,
    ):
        self.rhs = rhs
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.t_end = float(t_end)
        self.direction = 1.0 if t_end >= t0 else -1.0
        self.rtol = self.atol = tol * LOCAL_SAFETY
        self.max_step = max_step
        self.bound = bound
        self.max_steps = max_steps
        self.n_steps = 0
        self.segment: Segment | None = None
        self.t_old = self.t
        self.y_old = self.y
        self.k1 = rhs(self.t, self.y)
        self.h_min = MIN_STEP_REL * max(abs(self.t_end - self.t), 1e-300)
        self.h = self._initial_step()

    @property
    def finished(self) -> bool:
        return self.direction * (self.t_end - self.t) <= 0

    def _norm(self, e, y0, y1):
        sc = self.atol + self.rtol * np.maximum(np.abs(y0), np.abs(y1))
        return float(np.max(np.abs(e) / sc)) if e.size else 0.0

    def _initial_step(self) -> float:
        span = abs(self.t_end - self.t)
        if span == 0:
            return 0.0
        d0 = self._norm(self.y, self.y, self.y)
        d1 = self._norm(self.k1, self.y, self.y)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, span)
        y1 = self.y + self.direction * h0 * self.k1
        f1 = self.rhs(self.t + self.direction * h0, y1)
        d2 = self._norm(f1 - self.k1, self.y, self.y) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        return min(100 * h0, h1, span, self.max_step)

    def step(self) -> bool:
        """Take one accepted step; return ``False`` once ``t_end`` is reached."""
        if self.finished:
            return False
        rhs, t, y, k1 = self.rhs, self.t, self.y, self.k1
        d = self.direction
        h = min(self.h, self.max_step)
        while True:
            if h < self.h_min:
                raise StepUnderflow(f"step {h:.3e} below floor at t={t:.17g}")
            if (t + d * h - self.t_end) * d > 0:
                h = abs(self.t_end - t)
            hs = d * h
            k2 = rhs(t + C2 * hs, y + hs * (A21 * k1))
            k3 = rhs(t + C3 * hs, y + hs * (A31 * k1 + A32 * k2))
            k4 = rhs(t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = rhs(t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = rhs(t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            y1 = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = rhs(t + hs, y1)
            err = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            en = self._norm(err, y, y1)
            if not np.all(np.isfinite(y1)):
                en = math.inf
            if en <= 1.0:
                break
            fac = 0.2 if not math.isfinite(en) else max(0.2, 0.9 * en ** -0.2)
            h *= fac
        t1 = self.t_end if abs(self.t_end - (t + hs)) <= 4e-16 * max(1.0, abs(t)) else t + hs
        if np.max(np.abs(y1)) > self.bound:
            raise LeftDomain(f"state left the admissible region at t={t1:.17g}")
        self.segment = Segment(t, t1, y, y1, k1, k3, k4, k5, k6, k7)
        self.t_old, self.y_old = t, y
        self.t, self.y, self.k1 = t1, y1, k7
        self.h = h * (min(5.0, 0.9 * en ** -0.2) if en > 0 else 5.0)
        self.n_steps += 1
        if self.n_steps > self.max_steps:
            raise IntegrationError("step budget exhausted")
        return True

    def run(self):
        while self.step():
            pass
        return self.y


def solve(rhs: Callable, y0, t0: float, t1: float, tol: float, **kw):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1`` and return ``y(t1)``."""
    y0 = np.array(y0, dtype=float)
    if t1 == t0:
        return y0.copy()
    return Dopri5(rhs, t0, y0, t1, tol, **kw).run()
