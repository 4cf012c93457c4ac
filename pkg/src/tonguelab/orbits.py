"""Newton solvers for p/q periodic orbits.

Two complementary routes to the same orbits:

* :func:`solve_orbit_fixed_delta` keeps the drift fixed and solves the
  periodicity conditions ``x_q - x_0 - 2 pi p = 0``, ``y_q - y_0 = 0``
  for the initial point ``(x_0, y_0)``.
* :func:`solve_delta_y` keeps the initial angle ``x_0`` fixed and solves
  the vanishing-remainder equations for the pair ``(delta, y_0)``; the
  result samples the implicit functions ``delta = D(x_0, eps)`` and
  ``y_0 = Y(x_0, eps)`` whose range in delta is the Arnold tongue.

Both use damped Newton iterations: the Jacobian degenerates at the
saddle-node on the tongue boundary, where a plain Newton step overshoots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .cylmap import MapParams, PhaseState, RemainderPair, iterate, remainders

# Residual threshold below which an orbit counts as converged.
TAU_NEWTON = 1e-12
# Half-width of the parabolic band around monodromy trace 2.
TAU_CLS = 1e-8
# Determinant threshold for reporting a singular Newton system.
TAU_SINGULAR = 1e-14

_MAX_DAMPING_HALVINGS = 20


class SingularJacobianError(RuntimeError):
    """Newton system became singular - typically right at a saddle-node."""


class ContinuationError(RuntimeError):
    """A grid sweep failed; carries the first failing angle."""

    def __init__(self, x0: float, eps: float, message: str = ""):
        super().__init__(message or f"continuation failed at x0={x0:.6f}, eps={eps:g}")
        self.x0 = x0
        self.eps = eps


@dataclass(frozen=True)
class PeriodicOrbit:
    """A converged p/q orbit: its q states, residual, and stability kind."""

    states: tuple[PhaseState, ...]
    params: MapParams
    residual: RemainderPair
    kind: str  # "center" | "saddle" | "parabolic"


@dataclass(frozen=True)
class ImplicitSolution:
    """One sample of the implicit functions (delta, y0) at fixed x0."""

    x0: float
    eps: float
    delta: float
    y0: float
    converged: bool
    iterations: int


def monodromy(states, m: MapParams) -> np.ndarray:
    """Product of tangent maps along the q orbit states (last factor first)."""
    fp = m.f.derivative()
    mat = np.eye(2)
    for s in states:
        gp = -m.eps * fp.eval(s.x)
        mat = np.array([[1.0 + gp, 1.0], [gp, 1.0]]) @ mat
    return mat


def classify(orbit: PeriodicOrbit) -> str:
    """Stability from the monodromy trace t: center (|t| < 2), saddle
    (|t| > 2), parabolic inside the ``TAU_CLS`` band around |t| = 2."""
    t = float(np.trace(monodromy(orbit.states, orbit.params)))
    if abs(t) < 2.0 - TAU_CLS:
        return "center"
    if abs(t) > 2.0 + TAU_CLS:
        return "saddle"
    return "parabolic"


def _periodicity_residual(x0: float, y0: float, m: MapParams) -> tuple[np.ndarray, list[PhaseState]]:
    states = iterate(PhaseState(x0, y0), m, m.q)
    last = states[-1]
    return (np.array([last.x - x0 - 2.0 * math.pi * m.p, last.y - y0]),
            states[:-1])


def solve_orbit_fixed_delta(guess: PhaseState, m: MapParams,
                            max_iter: int = 50) -> PeriodicOrbit | None:
    """Damped Newton on the periodicity conditions at fixed drift.

    Returns the converged orbit, or ``None`` when the iteration does not
    converge within ``max_iter`` or diverges.  Raises
    :class:`SingularJacobianError` when the Newton system degenerates,
    which signals proximity to the saddle-node at the tongue edge.
    """
    x0, y0 = guess.x, guess.y
    res, states = _periodicity_residual(x0, y0, m)
    norm = float(np.linalg.norm(res))
    for _ in range(max_iter):
        if norm < TAU_NEWTON:
            orbit_states = tuple(states)
            orbit = PeriodicOrbit(orbit_states, m,
                                  remainders(orbit_states[0], m, m.q), "")
            return replace(orbit, kind=classify(orbit))
        jac = monodromy(states, m) - np.eye(2)
        det = float(np.linalg.det(jac))
        if abs(det) < TAU_SINGULAR:
            raise SingularJacobianError(
                f"periodicity Jacobian determinant {det:.3e} below {TAU_SINGULAR:g}")
        dx, dy = np.linalg.solve(jac, -res)
        lam = 1.0
        for _ in range(_MAX_DAMPING_HALVINGS):
            trial_res, trial_states = _periodicity_residual(x0 + lam * dx, y0 + lam * dy, m)
            trial_norm = float(np.linalg.norm(trial_res))
            if trial_norm < norm or trial_norm < TAU_NEWTON:
                break
            lam *= 0.5
        else:
            return None
        x0, y0 = x0 + lam * dx, y0 + lam * dy
        res, states, norm = trial_res, trial_states, trial_norm
        if not np.all(np.isfinite(res)) or norm > 1e8:
            return None
    if norm < TAU_NEWTON:
        orbit_states = tuple(states)
        orbit = PeriodicOrbit(orbit_states, m,
                              remainders(orbit_states[0], m, m.q), "")
        return replace(orbit, kind=classify(orbit))
    return None


def _implicit_residual(x0: float, y0: float, delta: float, eps: float,
                       m: MapParams) -> np.ndarray:
    pair = remainders(PhaseState(x0, y0), replace(m, eps=eps, delta=delta), m.q)
    return np.array([pair.R, pair.S])


def _fd_jacobian(x0, y0, delta, eps, m) -> np.ndarray:
    hd = max(1e-7, 1e-7 * abs(delta))
    hy = max(1e-7, 1e-7 * abs(y0))
    col_d = (_implicit_residual(x0, y0, delta + hd, eps, m)
             - _implicit_residual(x0, y0, delta - hd, eps, m)) / (2.0 * hd)
    col_y = (_implicit_residual(x0, y0 + hy, delta, eps, m)
             - _implicit_residual(x0, y0 - hy, delta, eps, m)) / (2.0 * hy)
    return np.column_stack([col_d, col_y])


def solve_delta_y(x0: float, eps: float, m: MapParams,
                  seed: tuple[float, float] | None = None,
                  max_iter: int = 50) -> ImplicitSolution:
    """Newton in ``(delta, y0)`` on the q-step remainders at fixed ``x0``.

    Without a seed the iteration starts from the unperturbed solution
    ``(0, 0)``, whose exact Jacobian ``[[-q(q+1)/2, q], [-q, 0]]`` (the
    one with determinant q^2) primes the first step; finite differences
    take over afterwards.  Non-convergence is flagged, not raised: the
    caller is expected to lower eps or refine its seed.
    """
    q = m.q
    if seed is None:
        delta, y0 = 0.0, 0.0
        jac = np.array([[-q * (q + 1) / 2.0, float(q)], [-float(q), 0.0]])
    else:
        delta, y0 = seed
        jac = None
    res = _implicit_residual(x0, y0, delta, eps, m)
    norm = float(np.linalg.norm(res))
    for it in range(max_iter):
        if norm < TAU_NEWTON:
            return ImplicitSolution(x0, eps, delta, y0, True, it)
        if jac is None:
            jac = _fd_jacobian(x0, y0, delta, eps, m)
        det = float(np.linalg.det(jac))
        if abs(det) < TAU_SINGULAR or not np.all(np.isfinite(jac)):
            return ImplicitSolution(x0, eps, delta, y0, False, it)
        dd, dy = np.linalg.solve(jac, -res)
        lam = 1.0
        for _ in range(_MAX_DAMPING_HALVINGS):
            trial = _implicit_residual(x0, y0 + lam * dy, delta + lam * dd, eps, m)
            trial_norm = float(np.linalg.norm(trial))
            if trial_norm < norm or trial_norm < TAU_NEWTON:
                break
            lam *= 0.5
        else:
            return ImplicitSolution(x0, eps, delta, y0, False, it)
        delta += lam * dd
        y0 += lam * dy
        res, norm = trial, trial_norm
        jac = None
        if not np.all(np.isfinite(res)):
            return ImplicitSolution(x0, eps, delta, y0, False, it)
    converged = norm < TAU_NEWTON
    return ImplicitSolution(x0, eps, delta, y0, converged, max_iter)


def solve_delta_y_homotopy(x0: float, eps: float, m: MapParams,
                           max_iter: int = 50, max_splits: int = 64) -> ImplicitSolution:
    """:func:`solve_delta_y` with a ramp in eps when the direct solve fails.

    The ramp doubles its resolution until the whole path converges, up to
    ``max_splits`` intervals; this realizes the independent-seed mode of
    grid sweeps.
    """
    sol = solve_delta_y(x0, eps, m, max_iter=max_iter)
    if sol.converged:
        return sol
    splits = 2
    while splits <= max_splits:
        seed = None
        ok = True
        for j in range(1, splits + 1):
            e = eps * j / splits
            sol = solve_delta_y(x0, e, m, seed=seed, max_iter=max_iter)
            if not sol.converged:
                ok = False
                break
            seed = (sol.delta, sol.y0)
        if ok:
            return sol
        splits *= 2
    return sol


# Newton-iteration budget that operationalizes the "eps small enough"
# restriction during continuation: a grid point must converge within this
# many steps from its neighbor's seed.
CONTINUATION_MAX_ITER = 12


def continue_in_x(eps: float, m: MapParams, grid_size: int,
                  mode: str = "continuation", jobs: int = 1) -> list[ImplicitSolution]:
    """Sample the implicit solution on a uniform x0 grid over [0, 2 pi).

    ``continuation`` mode seeds each point from its predecessor and is
    sequential; ``independent`` mode re-solves every point from the
    unperturbed seed (with an eps ramp) and may run points in parallel.
    Raises :class:`ContinuationError` at the first non-converged point.
    """
    if grid_size < 8 * m.q:
        raise ValueError(f"grid_size must be >= 8*q = {8 * m.q}")
    if mode not in ("continuation", "independent"):
        raise ValueError(f"unknown mode {mode!r}")
    xs = np.linspace(0.0, 2.0 * math.pi, grid_size, endpoint=False)

    if mode == "independent":
        def solve_one(x0: float) -> ImplicitSolution:
            return solve_delta_y_homotopy(float(x0), eps, m)

        if jobs > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                sols = list(pool.map(solve_one, xs))
        else:
            sols = [solve_one(x) for x in xs]
        for sol in sols:
            if not sol.converged:
                raise ContinuationError(sol.x0, eps)
        return sols

    sols: list[ImplicitSolution] = []
    first = solve_delta_y_homotopy(float(xs[0]), eps, m)
    if not first.converged:
        raise ContinuationError(float(xs[0]), eps)
    sols.append(first)
    seed = (first.delta, first.y0)
    for x0 in xs[1:]:
        sol = solve_delta_y(float(x0), eps, m, seed=seed,
                            max_iter=CONTINUATION_MAX_ITER)
        if not sol.converged:
            raise ContinuationError(float(x0), eps)
        sols.append(sol)
        seed = (sol.delta, sol.y0)
    return sols


def orbit_distance(a: PeriodicOrbit, b: PeriodicOrbit) -> float:
    """Distance between two orbits as point sets on the cylinder.

    Minimum over cyclic alignments of the maximum pointwise distance,
    with x compared modulo 2 pi; a q-periodic orbit re-found from any of
    its q points therefore has distance ~0 to itself.
    """
    if len(a.states) != len(b.states):
        return math.inf
    q = len(a.states)
    best = math.inf
    two_pi = 2.0 * math.pi
    for shift in range(q):
        worst = 0.0
        for i in range(q):
            sa = a.states[i]
            sb = b.states[(i + shift) % q]
            dx = (sa.x - sb.x) % two_pi
            dx = min(dx, two_pi - dx)
            worst = max(worst, dx, abs(sa.y - sb.y))
        best = min(best, worst)
    return best


def multistart_orbits(m: MapParams, x0_grid: int = 64,
                      y0_values: tuple[float, ...] = (0.0,),
                      dedupe_tol: float = 1e-6,
                      max_iter: int = 50) -> list[PeriodicOrbit]:
    """Fixed-delta orbit search from a grid of Newton starts, deduplicated.

    Singular-Jacobian starts are skipped (they sit on top of the
    saddle-node); everything that converges is kept once per orbit.
    """
    found: list[PeriodicOrbit] = []
    for x0 in np.linspace(0.0, 2.0 * math.pi, x0_grid, endpoint=False):
        for y0 in y0_values:
            try:
                orbit = solve_orbit_fixed_delta(PhaseState(float(x0), float(y0)), m,
                                                max_iter=max_iter)
            except SingularJacobianError:
                continue
            if orbit is None:
                continue
            if all(orbit_distance(orbit, o) >= dedupe_tol for o in found):
                found.append(orbit)
    return found
