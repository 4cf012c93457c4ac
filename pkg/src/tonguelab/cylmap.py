"""The drifted standard map on the cylinder, in shifted coordinates.

The map acts on ``(x, y)`` with ``y = v - mu`` the momentum measured from
the rotation number ``mu = 2 pi p / q``:

    x' = x + y + mu + g(x),      y' = y + g(x),
    g(x) = -delta - eps * f(x).

``x`` is kept as an unbounded lift coordinate (never reduced mod 2 pi) so
the winding ``2 pi p`` in the periodicity condition ``x_q = x_0 + 2 pi p``
stays explicit.  The q-step remainders (R, S) measure the deviation of the
q-th iterate from the pure rotation; their common zero is a p/q periodic
orbit.  All functions here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trigpoly import TrigPoly


@dataclass(frozen=True)
class MapParams:
    """Full specification of the drifted cylinder map.

    ``mu`` is always derived from ``p`` and ``q``; it is not stored.
    ``gcd(p, q) = 1`` is *not* required here (raw iteration is fine for
    reducible fractions) but is enforced by the tongue and series
    entry points.
    """

    eps: float
    delta: float
    f: TrigPoly
    p: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.p < 0:
            raise ValueError("p must be >= 0")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if not (math.isfinite(self.eps) and math.isfinite(self.delta)):
            raise ValueError("eps and delta must be finite")

    @property
    def mu(self) -> float:
        return 2.0 * math.pi * self.p / self.q

    def g(self, x: float) -> float:
        """Kick ``g(x) = -delta - eps * f(x)``."""
        return -self.delta - self.eps * self.f.eval(x)

    def g_prime(self, x: float) -> float:
        return -self.eps * self.f.derivative().eval(x)

    def coprime(self) -> bool:
        return math.gcd(self.p, self.q) == 1


@dataclass(frozen=True)
class PhaseState:
    """A point of the cylinder map in shifted coordinates (lift x, y)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("phase-space coordinates must be finite")


@dataclass(frozen=True)
class RemainderPair:
    """Deviation (R, S) of the n-th iterate from the rotation by n*mu."""

    R: float
    S: float


def step(s: PhaseState, m: MapParams) -> PhaseState:
    """One application of the map."""
    g = m.g(s.x)
    return PhaseState(s.x + s.y + m.mu + g, s.y + g)


def tangent_step(s: PhaseState, m: MapParams) -> np.ndarray:
    """Jacobian of :func:`step` at ``s``:

    ``[[1 + g'(x), 1], [g'(x), 1]]`` with determinant 1 (area preservation).
    """
    gp = m.g_prime(s.x)
    return np.array([[1.0 + gp, 1.0], [gp, 1.0]])


def iterate(s0: PhaseState, m: MapParams, n: int) -> list[PhaseState]:
    """States ``[s0, step(s0), ..., step^n(s0)]`` (length n + 1)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = [s0]
    s = s0
    for _ in range(n):
        s = step(s, m)
        out.append(s)
    return out


def remainders(s0: PhaseState, m: MapParams, n: int) -> RemainderPair:
    """The pair ``(R, S)`` of the n-th iterate, accumulated along the orbit:

    ``R = n*y0 + sum_{k<n} (n-k) g(x_k)``,  ``S = sum_{k<n} g(x_k)``.

    Equivalently ``R = x_n - x_0 - n*mu`` and ``S = y_n - y_0``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    r = n * s0.y
    ssum = 0.0
    s = s0
    for k in range(n):
        g = m.g(s.x)
        r += (n - k) * g
        ssum += g
        s = PhaseState(s.x + s.y + m.mu + g, s.y + g)
    return RemainderPair(r, ssum)
