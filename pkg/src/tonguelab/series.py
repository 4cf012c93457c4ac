"""Order-by-order expansion of the implicit drift and momentum functions.

The drift and momentum that make the orbit through ``(x0, Y)`` p/q
periodic admit power series in the perturbation strength,

    D(x0, eps) = D_1(x0) eps + D_2(x0) eps^2 + ...
    Y(x0, eps) = Y_1(x0) eps + Y_2(x0) eps^2 + ...

whose coefficients are trigonometric polynomials in ``x0``.  This module
computes them by propagating the orbit deviations through the map as
truncated eps-jets with :class:`~tonguelab.trigpoly.TrigPoly` coefficients
and cancelling the q-step remainders order by order.  At every order the
unknown pair ``(D_n, Y_n)`` enters the remainder coefficients affinely
through the constant matrix ``[[-q(q+1)/2, q], [-q, 0]]`` (determinant
q^2), so each order is a pair of scalar polynomial solves: the S-equation
fixes ``D_n``, then the R-equation fixes ``Y_n``.

The leading x-dependent index ``r`` (first n with a non-constant ``D_n``)
controls the tongue width, which scales like ``eps^r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cylmap import MapParams
from .trigpoly import (TrigPoly, product, range_extrema, shift_average,
                       weighted_shift_average)

# A coefficient D_n counts as constant when every harmonic above 0 is
# below this tolerance relative to the coefficient's own size; the
# relative form separates structural zeros from round-off.
R_DETECT_TOL = 1e-10


class LeadingIndexNotFound(RuntimeError):
    """No x-dependent coefficient was detected up to the computed order."""


class EpsSeries:
    """Truncated power series in eps with TrigPoly coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = tuple(coeffs)
        if not self.coeffs:
            raise ValueError("a series needs at least the constant term")

    @classmethod
    def zero(cls, order: int) -> "EpsSeries":
        z = TrigPoly.zero()
        return cls([z] * (order + 1))

    @classmethod
    def constant(cls, poly: TrigPoly, order: int) -> "EpsSeries":
        z = TrigPoly.zero()
        return cls([poly] + [z] * order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, n: int) -> TrigPoly:
        return self.coeffs[n]

    def truncated(self, order: int) -> "EpsSeries":
        if order >= self.order:
            z = TrigPoly.zero()
            return EpsSeries(self.coeffs + (z,) * (order - self.order))
        return EpsSeries(self.coeffs[:order + 1])

    def with_coeff(self, n: int, poly: TrigPoly) -> "EpsSeries":
        c = list(self.coeffs)
        c[n] = poly
        return EpsSeries(c)

    def __add__(self, other: "EpsSeries") -> "EpsSeries":
        n = min(self.order, other.order)
        return EpsSeries([self.coeffs[i] + other.coeffs[i] for i in range(n + 1)])

    def __sub__(self, other: "EpsSeries") -> "EpsSeries":
        n = min(self.order, other.order)
        return EpsSeries([self.coeffs[i] - other.coeffs[i] for i in range(n + 1)])

    def __neg__(self) -> "EpsSeries":
        return EpsSeries([-c for c in self.coeffs])

    def scaled(self, c: float) -> "EpsSeries":
        return EpsSeries([p * c for p in self.coeffs])

    def times_eps(self) -> "EpsSeries":
        """Multiply by eps: shift every coefficient up one power (the top
        coefficient falls off the truncation)."""
        return EpsSeries((TrigPoly.zero(),) + self.coeffs[:-1])

    def times_eps_extended(self) -> "EpsSeries":
        """Multiply by eps, growing the truncation order by one so no
        coefficient is lost."""
        return EpsSeries((TrigPoly.zero(),) + self.coeffs)

    def mul(self, other: "EpsSeries", max_degree: int | None = None) -> "EpsSeries":
        n = min(self.order, other.order)
        out = [TrigPoly.zero() for _ in range(n + 1)]
        for i, ci in enumerate(self.coeffs[:n + 1]):
            if ci.coeff_norm() == 0.0:
                continue
            for j in range(n + 1 - i):
                cj = other.coeffs[j]
                if cj.coeff_norm() == 0.0:
                    continue
                out[i + j] = out[i + j] + product(ci, cj, max_degree=max_degree)
        return EpsSeries(out)

    def __mul__(self, other):
        if isinstance(other, EpsSeries):
            return self.mul(other)
        return NotImplemented

    def eval(self, x, eps: float):
        """Sum of ``coeff_n(x) * eps^n`` over the stored orders."""
        acc = 0.0
        epow = 1.0
        for c in self.coeffs:
            acc = acc + c.eval(x) * epow
            epow *= eps
        return acc

    def to_list(self) -> list[dict]:
        return [c.to_dict() for c in self.coeffs]


def eval_series(s: EpsSeries, x, eps: float):
    """Module-level alias for :meth:`EpsSeries.eval`."""
    return s.eval(x, eps)


@dataclass(frozen=True)
class SeriesSolution:
    """The solved expansions plus the detected leading structure.

    ``r`` is the first order whose drift coefficient depends on x
    (``None`` when every computed coefficient is constant), and
    ``a_coeffs[n]`` is the constant part of the drift coefficient at
    order ``n < r``: together they give
    ``D(x, eps) = A(eps) + D_r(x) eps^r + O(eps^{r+1})``.
    """

    params: MapParams
    order: int
    delta: EpsSeries
    y: EpsSeries
    r: int | None
    a_coeffs: np.ndarray

    def to_dict(self) -> dict:
        return {
            "q": self.params.q,
            "p": self.params.p,
            "N": self.order,
            "r": self.r,
            "Delta": self.delta.to_list(),
            "Y": self.y.to_list(),
        }


def _is_constant(poly: TrigPoly) -> bool:
    mag = np.maximum(np.abs(poly.cos_coeffs), np.abs(np.concatenate([[0.0], poly.sin_coeffs])))
    if len(mag) <= 1:
        return True
    return bool(np.max(mag[1:]) <= R_DETECT_TOL * (1.0 + poly.coeff_norm()))


def _taylor_eval(fders: list[TrigPoly], xi: EpsSeries, order: int,
                 max_degree: int) -> EpsSeries:
    """``f(x0 + i mu + xi)`` as a series, from precomputed derivatives at
    the base point: ``sum_k f^(k)/k! * xi^k``.  ``xi`` has no constant
    term, so powers beyond ``order`` cannot contribute."""
    acc = EpsSeries.constant(fders[0], order)
    xi_pow = None
    inv_fact = 1.0
    for k in range(1, min(len(fders), order + 1)):
        xi_pow = xi if xi_pow is None else xi_pow.mul(xi, max_degree=max_degree)
        inv_fact /= k
        acc = acc + xi_pow.mul(EpsSeries.constant(fders[k] * inv_fact, order),
                               max_degree=max_degree)
    return acc


def _propagate(m: MapParams, fders: list[list[TrigPoly]], delta: EpsSeries,
               y: EpsSeries, order: int, max_degree: int) -> tuple[EpsSeries, EpsSeries]:
    """Push the deviation jets through q map steps and return the
    remainder series (R, S) = (xi_q, eta_q - eta_0)."""
    d = delta.truncated(order)
    xi = EpsSeries.zero(order)
    eta = y.truncated(order)
    for i in range(m.q):
        # f(x_i) is needed one order lower than the truncation because the
        # whole term carries an explicit factor of eps.
        fval = _taylor_eval(fders[i], xi.truncated(order - 1), order - 1, max_degree)
        g = (-d) - fval.times_eps_extended()
        xi = xi + eta + g
        eta = eta + g
    return xi, eta - y.truncated(order)


def expand(m: MapParams, order: int) -> SeriesSolution:
    """Solve the vanishing-remainder equations through ``eps^order``.

    Requires ``gcd(p, q) = 1``.  Degrees are capped at ``order * deg(f)``,
    which the polynomial structure of the coefficients guarantees is
    enough; hitting the cap therefore indicates a genuine blow-up rather
    than a budget misjudgment.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not m.coprime():
        raise ValueError(f"series expansion requires gcd(p, q) = 1, got p={m.p}, q={m.q}")
    q = m.q
    d = max(m.f.degree(), 1)
    max_degree = order * d

    # f and its derivatives, shifted to each base point x0 + i*mu
    base = [m.f]
    for _ in range(order - 1):
        base.append(base[-1].derivative())
    fders = [[g.shift(i * m.mu) for g in base] for i in range(q)]

    delta = EpsSeries.zero(order)
    y = EpsSeries.zero(order)
    for n in range(1, order + 1):
        r_ser, s_ser = _propagate(m, fders, delta, y, n, max_degree)
        rn = r_ser.coeff(n)
        sn = s_ser.coeff(n)
        # -q D_n + S_n = 0, then q Y_n - q(q+1)/2 D_n + R_n = 0
        dn = sn * (1.0 / q)
        yn = dn * ((q + 1) / 2.0) - rn * (1.0 / q)
        delta = delta.with_coeff(n, dn)
        y = y.with_coeff(n, yn)

    r = None
    for n in range(1, order + 1):
        if not _is_constant(delta.coeff(n)):
            r = n
            break
    upto = r if r is not None else order + 1
    a_coeffs = np.array([float(delta.coeff(n).cos_coeffs[0]) for n in range(upto)])
    return SeriesSolution(m, order, delta, y, r, a_coeffs)


@dataclass(frozen=True)
class FirstOrderReport:
    """Coefficient-wise comparison of the order-1 solution against the
    closed forms built from the shift averages of f."""

    delta1_error: float
    y1_error: float

    @property
    def max_error(self) -> float:
        return max(self.delta1_error, self.y1_error)


def verify_first_order(sol: SeriesSolution, m: MapParams) -> FirstOrderReport:
    """Check ``D_1 = -avg`` and ``Y_1 = -(q+1)/2 avg + wavg`` where avg and
    wavg are the plain and weighted shift averages of f over mu."""
    fbar = shift_average(m.f, m.q, m.mu)
    fbarbar = weighted_shift_average(m.f, m.q, m.mu)
    d1_expected = -fbar
    y1_expected = fbar * (-(m.q + 1) / 2.0) + fbarbar
    return FirstOrderReport(
        delta1_error=sol.delta.coeff(1).coeff_distance(d1_expected),
        y1_error=sol.y.coeff(1).coeff_distance(y1_expected),
    )


@dataclass(frozen=True)
class PeriodicityReport:
    """Invariance of the leading x-dependent coefficient under the shift
    by mu, and its harmonic support."""

    r: int
    shift_residual: float
    norm: float
    support: frozenset[int]
    support_multiples_of_q: bool

    @property
    def passed(self) -> bool:
        return (self.shift_residual < 1e-10 * self.norm
                and self.support_multiples_of_q)


def verify_periodicity(sol: SeriesSolution, m: MapParams) -> PeriodicityReport:
    """Check ``D_r(x + mu) = D_r(x)``; with gcd(p, q) = 1 this is the same
    as the support of D_r containing only multiples of q."""
    if sol.r is None:
        raise LeadingIndexNotFound(
            f"no x-dependent coefficient through order {sol.order}")
    dr = sol.delta.coeff(sol.r)
    norm = dr.coeff_norm()
    residual = dr.shift(m.mu).coeff_distance(dr)
    support = dr.support(R_DETECT_TOL * (1.0 + norm))
    return PeriodicityReport(
        r=sol.r,
        shift_residual=residual,
        norm=norm,
        support=frozenset(support),
        support_multiples_of_q=all(k % m.q == 0 for k in support),
    )


def predicted_width(sol: SeriesSolution, eps: float) -> float:
    """Leading-order tongue width ``range(D_r) * eps^r``."""
    if sol.r is None:
        raise LeadingIndexNotFound(
            f"no x-dependent coefficient through order {sol.order}; "
            "raise the expansion order")
    hi, lo, _, _ = range_extrema(sol.delta.coeff(sol.r))
    return (hi - lo) * eps ** sol.r
