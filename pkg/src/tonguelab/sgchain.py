"""Damped, torqued, twisted sine-Gordon chain.

q pendula with nearest-neighbor coupling and twisted periodic boundary
``x_{k+q} = x_k + 2 pi p``:

    x_k'' + gamma x_k' + eps sin(x_k) = x_{k+1} - 2 x_k + x_{k-1} + delta.

With damping every run settles to an equilibrium or a traveling wave in
which each pendulum repeats its neighbor with delay T/q and the whole
chain is periodic modulo the rotation by 2 pi p.  Equilibria of the chain
are in bijection with p/q periodic orbits of the drifted cylinder map
(take second differences), so the critical torque measured here can be
cross-checked against the tongue edge max of the drift profile.

Integration is fixed-step classical 4th order: runs are short and the
bisection logic on top needs deterministic reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

# Equilibrium when every |velocity| stays below this over a window.
TAU_EQ = 1e-8
# Traveling wave when the neighbor-delay identity holds this tightly.
TAU_WAVE = 1e-4
# Give up and report "undecided" after this much integrated time.
DEFAULT_HORIZON = 1e5
# Positions beyond this magnitude abort the run as a blow-up.
BLOWUP_LIMIT = 1e8


class BlowUpError(RuntimeError):
    """Integration left the physically meaningful region."""


@dataclass(frozen=True)
class ChainParams:
    """Chain length q, twist p, damping, gravity, and torque."""

    q: int
    p: int
    gamma: float
    eps: float
    delta: float

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("chain length q must be >= 2")
        if self.gamma <= 0:
            raise ValueError("damping gamma must be > 0 (the attractor "
                             "dichotomy needs dissipation)")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")


@dataclass(frozen=True)
class ChainState:
    t: float
    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pos", np.asarray(self.pos, dtype=float))
        object.__setattr__(self, "vel", np.asarray(self.vel, dtype=float))
        if not (np.all(np.isfinite(self.pos)) and np.all(np.isfinite(self.vel))):
            raise ValueError("chain state must be finite")


@dataclass(frozen=True)
class AttractorReport:
    kind: str  # "equilibrium" | "traveling_wave" | "undecided"
    mean_velocity: float
    wave_period: float | None
    delay_error: float | None


@dataclass(frozen=True)
class Trajectory:
    """Decimated samples of one integration plus the exact final state."""

    times: np.ndarray
    pos: np.ndarray  # shape (n_samples, q)
    vel: np.ndarray
    final: ChainState


def twist_state(c: ChainParams) -> ChainState:
    """Uniformly twisted chain at rest: ``x_k = 2 pi p k / q``."""
    k = np.arange(c.q)
    return ChainState(0.0, 2.0 * math.pi * c.p * k / c.q, np.zeros(c.q))


def default_dt(c: ChainParams) -> float:
    """Largest step satisfying the stability budget ``dt <= 0.1/sqrt(eps + 4)``."""
    return 0.1 / math.sqrt(max(1.0, c.eps + 4.0))


def _accel(pos: np.ndarray, vel: np.ndarray, c: ChainParams,
           wrap: float) -> np.ndarray:
    lap = np.roll(pos, -1) - 2.0 * pos + np.roll(pos, 1)
    lap[-1] += wrap
    lap[0] -= wrap
    return lap + c.delta - c.gamma * vel - c.eps * np.sin(pos)


def rhs(s: ChainState, c: ChainParams) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives ``(vel, acc)`` with the twisted wrap applied."""
    wrap = 2.0 * math.pi * c.p
    return s.vel.copy(), _accel(s.pos, s.vel, c, wrap)


def integrate(s0: ChainState, c: ChainParams, dt: float, t_end: float,
              record_every: int = 0) -> Trajectory:
    """Fixed-step RK4 from ``s0.t`` to exactly ``s0.t + t_end``.

    ``dt`` is shrunk (never grown) to divide ``t_end`` evenly.
    ``record_every = k`` stores every k-th step (0 records only the
    endpoints).  Raises :class:`BlowUpError` on runaway positions.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt > default_dt(c) * (1.0 + 1e-12):
        raise ValueError(f"dt={dt:g} exceeds the stability budget {default_dt(c):g}")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    steps = max(1, math.ceil(t_end / dt - 1e-12)) if t_end > 0 else 0
    h = t_end / steps if steps else dt
    wrap = 2.0 * math.pi * c.p
    q = c.q
    gamma, eps, delta = c.gamma, c.eps, c.delta
    lap = np.empty(q)

    def accel(xx, vv):
        lap[1:-1] = xx[2:] - 2.0 * xx[1:-1] + xx[:-2]
        lap[0] = xx[1] - 2.0 * xx[0] + xx[-1] - wrap
        lap[-1] = xx[0] + wrap - 2.0 * xx[-1] + xx[-2]
        return lap + delta - gamma * vv - eps * np.sin(xx)

    x = s0.pos.copy()
    v = s0.vel.copy()
    t = s0.t
    rec_t, rec_x, rec_v = [t], [x.copy()], [v.copy()]
    h2, h6 = 0.5 * h, h / 6.0
    for i in range(steps):
        k1v = accel(x, v)
        k2x = v + h2 * k1v
        k2v = accel(x + h2 * v, k2x)
        k3x = v + h2 * k2v
        k3v = accel(x + h2 * k2x, k3x)
        k4x = v + h * k3v
        k4v = accel(x + h * k3x, k4x)
        x = x + h6 * (v + 2.0 * (k2x + k3x) + k4x)
        v = v + h6 * (k1v + 2.0 * (k2v + k3v) + k4v)
        t = s0.t + (i + 1) * h
        if (i & 31) == 0 and np.max(np.abs(x)) > BLOWUP_LIMIT:
            raise BlowUpError(f"|position| exceeded {BLOWUP_LIMIT:g} at t={t:g}")
        if record_every and (i + 1) % record_every == 0:
            rec_t.append(t)
            rec_x.append(x.copy())
            rec_v.append(v.copy())
    if not record_every or (steps % record_every):
        rec_t.append(t)
        rec_x.append(x.copy())
        rec_v.append(v.copy())
    final = ChainState(t, x, v)
    return Trajectory(np.array(rec_t), np.array(rec_x), np.array(rec_v), final)


def energy(s: ChainState, c: ChainParams) -> float:
    """Discrete energy (kinetic + coupling + pendulum - torque work); for
    delta = 0 it is non-increasing along trajectories up to O(dt^4)."""
    wrap = 2.0 * math.pi * c.p
    diff = np.roll(s.pos, -1) - s.pos
    diff[-1] += wrap
    return float(0.5 * np.sum(s.vel ** 2) + 0.5 * np.sum(diff ** 2)
                 + c.eps * np.sum(1.0 - np.cos(s.pos)) - c.delta * np.sum(s.pos))


def _refine_period(spline_list, t0: float, span: float, t_guess: float,
                   rotation: float) -> float:
    """Minimize the period mismatch |x(t + T) - x(t) - rotation| over T."""
    ts = np.linspace(t0, t0 + span, 33)

    def mismatch(T: float) -> float:
        err = 0.0
        for sp in spline_list:
            err += float(np.sum((sp(ts + T) - sp(ts) - rotation) ** 2))
        return err

    res = minimize_scalar(mismatch, bounds=(0.75 * t_guess, 1.3 * t_guess),
                          method="bounded", options={"xatol": 1e-10})
    return float(res.x)


def classify_attractor(s0: ChainState, c: ChainParams,
                       horizon: float = DEFAULT_HORIZON,
                       dt: float | None = None) -> AttractorReport:
    """Integrate in growing windows until the run settles.

    Equilibrium: every |velocity| below ``TAU_EQ`` throughout the last
    window.  Traveling wave: site 0 advances by full turns of 2 pi p at a
    steady interval (that interval is the period T, robust even for the
    creeping waves just above depinning) and the delay identity
    ``x_k(t) = x_{k+-1}(t + T/q)`` holds to ``TAU_WAVE``.  Otherwise
    undecided at the horizon.
    """
    if dt is None:
        dt = default_dt(c)
    state = s0
    elapsed = 0.0
    window = 50.0
    ref = float(s0.pos[0])
    turns = 2.0 * math.pi * max(c.p, 1)
    crossings: list[float] = []
    last_turn = 0
    while elapsed < horizon:
        window = min(window, max(horizon - elapsed, 2 * dt))
        traj = integrate(state, c, dt, window, record_every=1)
        state = traj.final
        elapsed += window

        if float(np.max(np.abs(traj.vel[1:]))) < TAU_EQ:
            return AttractorReport("equilibrium", 0.0, None, None)

        # full-turn crossings of site 0
        adv = np.floor((traj.pos[:, 0] - ref) / turns).astype(int)
        for i in np.nonzero(np.diff(adv) != 0)[0]:
            k_new = int(adv[i + 1])
            level = ref + turns * (k_new if k_new > last_turn else last_turn)
            x0a, x0b = traj.pos[i, 0], traj.pos[i + 1, 0]
            frac = (level - x0a) / (x0b - x0a) if x0b != x0a else 0.5
            crossings.append(float(traj.times[i] + frac * (traj.times[i + 1] - traj.times[i])))
            last_turn = k_new
        if len(crossings) >= 3:
            t_a = crossings[-2] - crossings[-3]
            t_b = crossings[-1] - crossings[-2]
            if t_a > 0 and t_b > 0 and abs(t_a - t_b) < 0.02 * t_b:
                sign = 1.0 if state.pos[0] >= ref else -1.0
                report = _try_wave(state, c, dt, t_b, sign)
                if report is not None:
                    return report
                crossings = crossings[-1:]
        window = min(window * 2.0, 3200.0)
    omega = (float(state.pos[0]) - ref) / max(elapsed, dt)
    return AttractorReport("undecided", omega, None, None)


def _try_wave(state: ChainState, c: ChainParams, dt: float,
              t_guess: float, sign: float) -> AttractorReport | None:
    """Record a dense stretch and test the delay identity against it."""
    rotation = 2.0 * math.pi * c.p
    if c.p == 0:
        return None
    if not (0 < t_guess < 2e5):
        return None
    span = 1.6 * t_guess + 10.0
    traj = integrate(state, c, dt, span, record_every=1)
    splines = [CubicSpline(traj.times, traj.pos[:, k]) for k in range(c.q)]
    t0 = float(traj.times[0])
    probe = 0.25 * t_guess
    T = _refine_period(splines, t0, probe, t_guess, sign * rotation)
    ts = np.linspace(t0, t0 + probe, 257)
    delay = T / c.q
    worst = math.inf
    for neighbor in (-1, +1):  # the wave may run either way around the ring
        err = 0.0
        for k in range(c.q):
            other = (k + neighbor) % c.q
            # unwrap the ring seam: x_{k+q} = x_k + 2 pi p
            offset = rotation * _seam(k, neighbor, c.q)
            e = np.max(np.abs(splines[k](ts) - splines[other](ts + delay) - offset))
            err = max(err, float(e))
        worst = min(worst, err)
    if worst < TAU_WAVE:
        return AttractorReport("traveling_wave", sign * rotation / T, T, worst)
    return None


def _seam(k: int, neighbor: int, q: int) -> int:
    """Winding correction when index k+neighbor wraps around the ring."""
    j = k + neighbor
    if j < 0:
        return -1
    if j >= q:
        return 1
    return 0


class InvalidBracketError(RuntimeError):
    def __init__(self, lo: float, hi: float, message: str):
        super().__init__(f"{message} (bracket [{lo:g}, {hi:g}])")
        self.lo = lo
        self.hi = hi


def _settle(s0: ChainState, c: ChainParams, horizon: float,
            dt: float) -> ChainState | None:
    """Integrate until all velocities stay below ``TAU_EQ`` over a window;
    ``None`` when the horizon runs out first."""
    state = s0
    elapsed = 0.0
    window = 50.0
    while elapsed < horizon:
        window = min(window, max(horizon - elapsed, 2 * dt))
        traj = integrate(state, c, dt, window, record_every=8)
        state = traj.final
        elapsed += window
        if float(np.max(np.abs(traj.vel[1:]))) < TAU_EQ:
            return state
        window = min(window * 2.0, 4000.0)
    return None


def _settles_or_depins(s0: ChainState, c: ChainParams, horizon: float,
                       dt: float) -> tuple[str, ChainState]:
    """Fast pinned/depinned dichotomy for a state near the pinned branch.

    "equilibrium" when all velocities drop below ``TAU_EQ`` over a
    window; "depinned" when any site travels more than half a radian
    from its start.  Warm-started from a settled pinned shape, the
    pinned-side transient stays well below that, while one slip event
    moves a site by a full site spacing; so the test decides after a
    single bottleneck passage instead of waiting out a whole wave
    period, which diverges at the depinning threshold.  Returns the
    outcome together with the final state.
    """
    ref = s0.pos.copy()
    escape = 0.5
    state = s0
    elapsed = 0.0
    window = 50.0
    while elapsed < horizon:
        window = min(window, max(horizon - elapsed, 2 * dt))
        traj = integrate(state, c, dt, window, record_every=8)
        state = traj.final
        elapsed += window
        if float(np.max(np.abs(traj.vel[1:]))) < TAU_EQ:
            return "equilibrium", state
        if float(np.max(np.abs(state.pos - ref))) > escape:
            return "depinned", state
        window = min(window * 2.0, 4000.0)
    return "undecided", state


def critical_torque(c: ChainParams, bracket: tuple[float, float],
                    rel_tol: float = 1e-3,
                    horizon: float = DEFAULT_HORIZON) -> float:
    """Bisect the torque between pinned and running behavior.

    The bracket ends are validated with the full attractor classifier
    (equilibrium at ``bracket[0]``, traveling wave at ``bracket[1]``).
    Interior points use the pinned/depinned dichotomy instead: close to
    the threshold the wave period diverges, so waiting for a full period
    there would turn each probe into an hours-long run, while escape by a
    full turn decides "no equilibrium" just as rigorously given the
    attractor dichotomy.  Each probe restarts from the last settled
    equilibrium so the continuation follows the pinned branch.
    """
    lo, hi = bracket
    if not lo < hi:
        raise InvalidBracketError(lo, hi, "bracket must satisfy lo < hi")
    dt = default_dt(c)
    state = twist_state(c)
    rep_lo = classify_attractor(state, replace(c, delta=lo), horizon=horizon)
    if rep_lo.kind != "equilibrium":
        raise InvalidBracketError(lo, hi, f"no equilibrium at delta={lo:g} "
                                          f"(got {rep_lo.kind})")
    # settle fully onto the pinned branch before continuing in delta
    settled = _settle(state, replace(c, delta=lo), horizon, dt)
    if settled is None:
        raise InvalidBracketError(lo, hi, f"could not settle at delta={lo:g}")
    eq_state = ChainState(0.0, settled.pos, np.zeros(c.q))
    rep_hi = classify_attractor(eq_state, replace(c, delta=hi), horizon=horizon)
    if rep_hi.kind != "traveling_wave":
        raise InvalidBracketError(lo, hi, f"no traveling wave at delta={hi:g} "
                                          f"(got {rep_hi.kind})")
    while (hi - lo) > rel_tol * max(abs(hi), abs(lo), 1e-12):
        mid = 0.5 * (lo + hi)
        cm = replace(c, delta=mid)
        outcome, final = _settles_or_depins(eq_state, cm, horizon, dt)
        if outcome == "equilibrium":
            lo = mid
            eq_state = ChainState(0.0, final.pos, np.zeros(c.q))
        elif outcome == "depinned":
            hi = mid
        else:
            raise RuntimeError(f"undecided at delta={mid:g} within horizon "
                               f"{horizon:g}; raise the horizon")
    return 0.5 * (lo + hi)
