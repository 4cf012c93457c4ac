"""Arithmetic on real trigonometric polynomials.

A polynomial is kept as two real coefficient arrays,

    P(x) = a_0 + sum_k (a_k cos kx + b_k sin kx),     1 <= k <= D,

where ``D`` is the nominal capacity of the arrays.  All quantities stay
real; no complex exponential representation is used internally, so no
spurious imaginary round-off can leak into coefficients.  Values are
immutable after construction and every operation returns a new
:class:`TrigPoly`, which makes them safe to share across threads.

The coefficient threshold ``TAU_DEG`` is applied only when *reporting*
the effective degree (and in :meth:`TrigPoly.support`); it never mutates
stored coefficients.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence

import numpy as np

# Threshold for reporting the effective degree: largest k with
# max(|a_k|, |b_k|) > TAU_DEG.
TAU_DEG = 1e-12

# Default cap on the degree a product may reach.  Exceeding a cap means a
# computation (typically a series expansion) asked for more resolution
# than was budgeted, and is an error rather than a silent truncation.
DEFAULT_MAX_DEGREE = 4096


class CapacityError(RuntimeError):
    """A product would exceed the configured maximum degree."""


class TrigPoly:
    """Immutable real trigonometric polynomial.

    Parameters
    ----------
    cos_coeffs : sequence of float
        ``[a_0, a_1, ..., a_D]``.
    sin_coeffs : sequence of float, optional
        ``[b_1, ..., b_D]``; must be one entry shorter than
        ``cos_coeffs``.  Omitted entries are zero.
    """

    __slots__ = ("_a", "_b")

    def __init__(self, cos_coeffs: Sequence[float] = (0.0,),
                 sin_coeffs: Sequence[float] = ()):
        a = np.atleast_1d(np.asarray(cos_coeffs, dtype=float)).copy()
        b_in = np.atleast_1d(np.asarray(sin_coeffs, dtype=float)) if len(sin_coeffs) else np.zeros(0)
        if a.ndim != 1 or b_in.ndim != 1:
            raise ValueError("coefficient arrays must be one-dimensional")
        if len(a) == 0:
            a = np.zeros(1)
        if len(b_in) > len(a) - 1:
            # grow the cosine array so both harmonics fit
            a = np.concatenate([a, np.zeros(len(b_in) + 1 - len(a))])
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b_in))):
            raise ValueError("coefficients must be finite")
        # internal layout: b aligned with a, with the unused b_0 slot pinned to 0
        b = np.zeros(len(a))
        b[1:len(b_in) + 1] = b_in
        a.flags.writeable = False
        b.flags.writeable = False
        self._a = a
        self._b = b

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "TrigPoly":
        return cls([0.0])

    @classmethod
    def constant(cls, c: float) -> "TrigPoly":
        return cls([float(c)])

    @classmethod
    def sine(cls, k: int = 1, amplitude: float = 1.0) -> "TrigPoly":
        """``amplitude * sin(kx)``."""
        if k < 1:
            raise ValueError("harmonic index must be >= 1")
        b = np.zeros(k)
        b[k - 1] = amplitude
        return cls(np.zeros(k + 1), b)

    @classmethod
    def cosine(cls, k: int = 1, amplitude: float = 1.0) -> "TrigPoly":
        """``amplitude * cos(kx)`` (``k = 0`` gives a constant)."""
        if k < 0:
            raise ValueError("harmonic index must be >= 0")
        a = np.zeros(k + 1)
        a[k] = amplitude
        return cls(a)

    @classmethod
    def _from_arrays(cls, a: np.ndarray, b: np.ndarray) -> "TrigPoly":
        obj = cls.__new__(cls)
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        a.flags.writeable = False
        b.flags.writeable = False
        obj._a = a
        obj._b = b
        return obj

    # -- basic views ---------------------------------------------------

    @property
    def cos_coeffs(self) -> np.ndarray:
        """``[a_0, ..., a_D]`` (read-only view)."""
        return self._a

    @property
    def sin_coeffs(self) -> np.ndarray:
        """``[b_1, ..., b_D]`` (read-only view)."""
        return self._b[1:]

    @property
    def capacity(self) -> int:
        """Nominal degree D of the stored arrays."""
        return len(self._a) - 1

    def degree(self, tau: float = TAU_DEG) -> int:
        """Effective degree: largest k with ``max(|a_k|, |b_k|) > tau``.

        Returns 0 for constants (and for the zero polynomial).
        """
        mag = np.maximum(np.abs(self._a), np.abs(self._b))
        sig = np.nonzero(mag > tau)[0]
        return int(sig[-1]) if len(sig) else 0

    def support(self, tau: float) -> set[int]:
        """Frequencies k with ``max(|a_k|, |b_k|) > tau``."""
        if tau <= 0:
            raise ValueError("tolerance must be positive")
        mag = np.maximum(np.abs(self._a), np.abs(self._b))
        return set(int(k) for k in np.nonzero(mag > tau)[0])

    def coeff_norm(self) -> float:
        """Max absolute coefficient (sup norm on the coefficient vector)."""
        if len(self._a) == 0:
            return 0.0
        return float(max(np.max(np.abs(self._a)), np.max(np.abs(self._b))))

    # -- evaluation ----------------------------------------------------

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Evaluate at ``x`` (radians); accepts scalars or arrays."""
        xs = np.asarray(x, dtype=float)
        k = np.arange(len(self._a))
        kx = np.multiply.outer(xs, k)
        vals = np.cos(kx) @ self._a + np.sin(kx) @ self._b
        return float(vals) if np.isscalar(x) or xs.ndim == 0 else vals

    # -- calculus and shifts --------------------------------------------

    def derivative(self) -> "TrigPoly":
        """d/dx: ``a_k cos kx -> -k a_k sin kx``, ``b_k sin kx -> k b_k cos kx``."""
        k = np.arange(len(self._a))
        return TrigPoly._from_arrays(k * self._b, -k * self._a)

    def shift(self, s: float) -> "TrigPoly":
        """Return Q with ``Q(x) = P(x + s)``; degree is unchanged."""
        k = np.arange(len(self._a))
        c, sn = np.cos(k * s), np.sin(k * s)
        return TrigPoly._from_arrays(self._a * c + self._b * sn,
                                     -self._a * sn + self._b * c)

    # -- ring operations -------------------------------------------------

    def _padded(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if len(self._a) >= n:
            return self._a, self._b
        pad = np.zeros(n - len(self._a))
        return np.concatenate([self._a, pad]), np.concatenate([self._b, pad])

    def __add__(self, other) -> "TrigPoly":
        if isinstance(other, (int, float)):
            a = self._a.copy()
            a[0] += other
            return TrigPoly._from_arrays(a, self._b.copy())
        if not isinstance(other, TrigPoly):
            return NotImplemented
        n = max(len(self._a), len(other._a))
        a1, b1 = self._padded(n)
        a2, b2 = other._padded(n)
        return TrigPoly._from_arrays(a1 + a2, b1 + b2)

    __radd__ = __add__

    def __neg__(self) -> "TrigPoly":
        return TrigPoly._from_arrays(-self._a, -self._b)

    def __sub__(self, other) -> "TrigPoly":
        if isinstance(other, (int, float)):
            return self + (-other)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "TrigPoly":
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return TrigPoly._from_arrays(self._a * other, self._b * other)
        if isinstance(other, TrigPoly):
            return product(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def coeff_distance(self, other: "TrigPoly") -> float:
        """Max absolute coefficient difference, after padding."""
        return (self - other).coeff_norm()

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {"cos": [float(v) for v in self._a],
                "sin": [float(v) for v in self._b[1:]]}

    @classmethod
    def from_dict(cls, d: dict) -> "TrigPoly":
        return cls(d.get("cos", [0.0]), d.get("sin", []))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "TrigPoly":
        return cls.from_dict(json.loads(s))

    def __repr__(self) -> str:
        return f"TrigPoly(cos={list(self._a)!r}, sin={list(self._b[1:])!r})"


def product(p: TrigPoly, q: TrigPoly, max_degree: int | None = None) -> TrigPoly:
    """Product of two trigonometric polynomials by product-to-sum identities.

    Raises :class:`CapacityError` when the effective degrees would exceed
    ``max_degree`` (default :data:`DEFAULT_MAX_DEGREE`).
    """
    cap = DEFAULT_MAX_DEGREE if max_degree is None else max_degree
    if p.degree() + q.degree() > cap:
        raise CapacityError(
            f"product degree {p.degree()} + {q.degree()} exceeds capacity {cap}")
    a1, b1 = p._a, p._b
    a2, b2 = q._a, q._b
    n1, n2 = len(a1), len(a2)
    nout = n1 + n2 - 1

    j = np.arange(n1)[:, None]
    k = np.arange(n2)[None, :]
    isum = (j + k).ravel()
    idif = np.abs(j - k).ravel()
    sgn = np.sign(j - k).ravel().astype(float)

    aa = np.outer(a1, a2).ravel()
    bb = np.outer(b1, b2).ravel()
    ab = np.outer(a1, b2).ravel()
    ba = np.outer(b1, a2).ravel()

    # cos j * cos k = (cos(j-k) + cos(j+k))/2
    # sin j * sin k = (cos(j-k) - cos(j+k))/2
    # cos j * sin k = (sin(j+k) - sin(j-k))/2
    # sin j * cos k = (sin(j+k) + sin(j-k))/2,  sin(-m) = -sin(m)
    a_out = (np.bincount(isum, weights=0.5 * (aa - bb), minlength=nout)
             + np.bincount(idif, weights=0.5 * (aa + bb), minlength=nout))
    b_out = (np.bincount(isum, weights=0.5 * (ab + ba), minlength=nout)
             + np.bincount(idif, weights=0.5 * sgn * (ba - ab), minlength=nout))
    return TrigPoly._from_arrays(a_out, b_out)


def frequency_support(p: TrigPoly, tau: float) -> set[int]:
    """Frequencies k of ``p`` with ``max(|a_k|, |b_k|) > tau``."""
    return p.support(tau)


def shift_average(f: TrigPoly, q: int, mu: float) -> TrigPoly:
    """``(1/q) * sum_{k=0}^{q-1} f(x + k mu)``.

    With ``mu = 2 pi p / q`` and ``gcd(p, q) = 1`` this annihilates every
    harmonic of ``f`` whose frequency is not a multiple of ``q``.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    acc = f
    for k in range(1, q):
        acc = acc + f.shift(k * mu)
    return acc * (1.0 / q)


def weighted_shift_average(f: TrigPoly, q: int, mu: float) -> TrigPoly:
    """``(1/q) * sum_{k=0}^{q-1} (q - k) f(x + k mu)``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    acc = f * float(q)
    for k in range(1, q):
        acc = acc + f.shift(k * mu) * float(q - k)
    return acc * (1.0 / q)


def range_extrema(p: TrigPoly, grid_factor: int = 64,
                  newton_tol: float = 1e-12) -> tuple[float, float, float, float]:
    """Global extrema of ``p`` over one period.

    Returns ``(max, min, argmax, argmin)`` with arguments in ``[0, 2 pi)``.
    A dense scan with at least ``grid_factor * (degree + 1)`` points
    brackets every extremum (a degree-d polynomial has at most 2d of
    them); Newton iteration on ``p' = 0`` then polishes the two winners.
    """
    d = p.degree()
    if d == 0:
        c = float(p._a[0])
        return c, c, 0.0, 0.0
    n = grid_factor * (d + 1)
    xs = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    vals = p.eval(xs)
    dp = p.derivative()
    ddp = dp.derivative()

    def polish(x0: float) -> float:
        h = 2.0 * math.pi / n
        x = x0
        for _ in range(60):
            g = dp.eval(x)
            if abs(g) < newton_tol:
                break
            curv = ddp.eval(x)
            if curv == 0.0:
                break
            step = g / curv
            if abs(step) > h:  # stay inside the bracketing cell
                step = math.copysign(h, step)
            x -= step
        return x % (2.0 * math.pi)

    x_hi = polish(float(xs[int(np.argmax(vals))]))
    x_lo = polish(float(xs[int(np.argmin(vals))]))
    return (float(p.eval(x_hi)), float(p.eval(x_lo)), x_hi, x_lo)


def reconstruct(samples: Iterable[float], capacity: int) -> TrigPoly:
    """Recover coefficients of a degree <= ``capacity`` polynomial from
    ``2 * (capacity + 1)`` uniform samples on ``[0, 2 pi)``."""
    y = np.asarray(list(samples), dtype=float)
    m = len(y)
    if m < 2 * capacity + 1:
        raise ValueError("need at least 2*capacity + 1 samples")
    spec = np.fft.rfft(y) / m
    a = np.zeros(capacity + 1)
    b = np.zeros(capacity)
    a[0] = spec[0].real
    kmax = min(capacity, len(spec) - 1)
    a[1:kmax + 1] = 2.0 * spec[1:kmax + 1].real
    b[:kmax] = -2.0 * spec[1:kmax + 1].imag
    return TrigPoly(a, b)
