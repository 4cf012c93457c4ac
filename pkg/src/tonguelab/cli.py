"""Command-line front end.

Subcommands map one-to-one onto the library: ``orbit`` (fixed-drift
search), ``profile`` (drift profile over x0), ``tongue`` (width sweep
over eps), ``series`` (eps expansion), ``chain`` (sine-Gordon runs), and
``fit`` (power-law fit of a width CSV).  Every numeric knob has both a
flag and a config-file key (``key=value`` lines, flags win); all outputs
carry the tool version and the fully resolved configuration.

Exit codes: 0 success, 1 numerical failure (diagnostics on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .cylmap import MapParams, PhaseState
from .orbits import (ContinuationError, SingularJacobianError, continue_in_x,
                     multistart_orbits)
from .series import LeadingIndexNotFound, expand, verify_first_order, verify_periodicity
from .sgchain import (BlowUpError, ChainParams, ChainState, InvalidBracketError,
                      classify_attractor, critical_torque, default_dt, integrate,
                      twist_state)
from .svgfig import emit_svg
from .tongue import InsufficientDataError, ScalingFit, TongueSample, fit_exponent, sweep
from .trigpoly import TrigPoly

_USAGE_ERROR = 2
_NUMERIC_ERROR = 1

_F_SHORTHAND = re.compile(r"^(sin|cos)\s*:?\s*(\d+)?\s*x?$")


class UsageError(Exception):
    pass


def parse_f(spec: str) -> TrigPoly:
    """Parse the forcing term: ``sin``/``cos`` (optionally ``sin 2x``)
    or an explicit coefficient object ``{"cos":[...],"sin":[...]}``."""
    spec = spec.strip()
    m = _F_SHORTHAND.match(spec)
    if m:
        k = int(m.group(2) or 1)
        return TrigPoly.sine(k) if m.group(1) == "sin" else TrigPoly.cosine(k)
    if spec.startswith("{"):
        try:
            return TrigPoly.from_json(spec)
        except (json.JSONDecodeError, ValueError) as exc:
            raise UsageError(f"bad coefficient object for --f: {exc}") from exc
    raise UsageError(f"cannot parse --f {spec!r}: use sin, cos, 'sin 2x', or a "
                     '{"cos":[...],"sin":[...]} object')


@dataclass
class RunConfig:
    """Fully resolved run configuration; round-trips through to_dict."""

    subcommand: str
    f: str = "sin"
    q: int = 1
    p: int = 0
    eps: list[float] = field(default_factory=lambda: [0.1])
    delta: float = 0.0
    order: int = 4
    grid: int = 64
    gamma: float = 0.5
    dt: float = 0.0  # 0 = automatic
    horizon: float = 1e5
    jobs: int = 1
    format: str = "csv"
    out: str = ""
    report: str = ""
    input: str = ""
    bracket: list[float] = field(default_factory=list)
    t_end: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def map_params(self, eps: float = 0.0, delta: float | None = None) -> MapParams:
        return MapParams(eps=eps, delta=self.delta if delta is None else delta,
                         f=parse_f(self.f), p=self.p, q=self.q)

    def chain_params(self) -> ChainParams:
        return ChainParams(q=self.q, p=self.p, gamma=self.gamma,
                           eps=self.eps[0], delta=self.delta)


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def read_config_file(path: str) -> dict:
    """Parse ``key=value`` lines; '#' starts a comment."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


_INT_KEYS = {"q", "p", "order", "grid", "jobs"}
_FLOAT_KEYS = {"delta", "gamma", "dt", "horizon", "t_end"}
_LIST_KEYS = {"eps", "bracket"}


def _coerce(key: str, value) -> object:
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _LIST_KEYS:
        return _parse_float_list(value) if isinstance(value, str) else [float(v) for v in value]
    return value


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file, and flags (flags win)."""
    cfg = RunConfig(subcommand=args.subcommand)
    file_values = read_config_file(args.config) if args.config else {}
    for key, value in file_values.items():
        if key == "subcommand":
            continue
        if not hasattr(cfg, key):
            raise UsageError(f"unknown config key {key!r}")
        setattr(cfg, key, _coerce(key, value))
    for f in fields(RunConfig):
        flag_value = getattr(args, f.name, None)
        if flag_value is not None and f.name != "subcommand":
            setattr(cfg, f.name, _coerce(f.name, flag_value))
    return cfg


def _meta(cfg: RunConfig, t_start: float) -> dict:
    return {
        "tool": "tonguelab",
        "version": __version__,
        "config": cfg.to_dict(),
        "wallclock_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "elapsed_s": round(time.time() - t_start, 3),
    }


def _svg_meta(cfg: RunConfig) -> dict:
    # no wall-clock here: SVG output is byte-deterministic for equal input
    return {"tool": "tonguelab", "version": __version__,
            "config": json.dumps(cfg.to_dict(), sort_keys=True)}


def _open_out(path: str):
    return open(path, "w", encoding="utf-8", newline="\n") if path else sys.stdout


def _write_csv(cfg: RunConfig, t0: float, header: str, rows, path: str) -> None:
    meta = _meta(cfg, t0)
    fh = _open_out(path)
    try:
        fh.write(f"# tonguelab {meta['version']}\n")
        fh.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
        fh.write(f"# wallclock: {meta['wallclock_utc']} elapsed_s={meta['elapsed_s']}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")
    finally:
        if path:
            fh.close()


def _write_json(cfg: RunConfig, t0: float, payload: dict, path: str) -> None:
    payload = {"meta": _meta(cfg, t0), **payload}
    fh = _open_out(path)
    try:
        json.dump(payload, fh, indent=2, sort_keys=False)
        fh.write("\n")
    finally:
        if path:
            fh.close()


# -- subcommand runners ---------------------------------------------------

def _run_orbit(cfg: RunConfig, t0: float) -> int:
    eps = cfg.eps[0]
    m = cfg.map_params(eps=eps)
    y_spread = (0.0,) if eps == 0 else (0.0, eps / 2, -eps / 2)
    orbits = multistart_orbits(m, x0_grid=cfg.grid, y0_values=y_spread)
    payload = {
        "orbits": [
            {
                "kind": o.kind,
                "residual": {"R": o.residual.R, "S": o.residual.S},
                "states": [{"x": s.x, "y": s.y} for s in o.states],
            }
            for o in orbits
        ]
    }
    _write_json(cfg, t0, payload, cfg.out)
    return 0


def _run_profile(cfg: RunConfig, t0: float) -> int:
    eps = cfg.eps[0]
    m = cfg.map_params(eps=eps, delta=0.0)
    if not m.coprime():
        raise UsageError(f"profile requires gcd(p, q) = 1, got p={cfg.p}, q={cfg.q}")
    sols = continue_in_x(eps, m, cfg.grid, jobs=cfg.jobs)
    if cfg.format == "svg":
        dataset = {"x0": [s.x0 for s in sols], "delta": [s.delta for s in sols],
                   "xlabel": "x0", "ylabel": "delta"}
        emit_svg(dataset, "profile", cfg.out or "profile.svg", _svg_meta(cfg))
    elif cfg.format == "json":
        _write_json(cfg, t0, {"profile": [
            {"x0": s.x0, "delta": s.delta, "y0": s.y0, "iterations": s.iterations}
            for s in sols]}, cfg.out)
    else:
        _write_csv(cfg, t0, "x0,delta,y0",
                   [(s.x0, s.delta, s.y0) for s in sols], cfg.out)
    return 0


def _run_tongue(cfg: RunConfig, t0: float) -> int:
    m = cfg.map_params()
    if not m.coprime():
        raise UsageError(f"tongue requires gcd(p, q) = 1, got p={cfg.p}, q={cfg.q}")
    result = sweep(m, sorted(cfg.eps), grid=cfg.grid)
    for failure in result.failures:
        print(f"tonguelab: eps={failure.eps:g} failed: {failure.reason}",
              file=sys.stderr)
    samples = result.samples
    if cfg.format == "svg":
        if not samples:
            raise ContinuationError(0.0, 0.0, "no tongue samples to plot")
        fit = _maybe_fit(samples)
        dataset = {"eps": [s.eps for s in samples], "width": [s.width for s in samples],
                   "xlabel": "eps", "ylabel": "width"}
        if fit is not None:
            dataset["slope"] = fit.exponent
            dataset["intercept"] = fit.log_prefactor
        emit_svg(dataset, "loglog", cfg.out or "tongue.svg", _svg_meta(cfg))
    elif cfg.format == "json":
        _write_json(cfg, t0, {"samples": [asdict(s) for s in samples],
                              "failures": [asdict(f) for f in result.failures]},
                    cfg.out)
    else:
        _write_csv(cfg, t0, "eps,width,delta_max,delta_min,x_argmax,x_argmin",
                   [(s.eps, s.width, s.delta_max, s.delta_min, s.x_argmax, s.x_argmin)
                    for s in samples], cfg.out)
    return 0 if samples and not result.failures else (0 if samples else 1)


def _maybe_fit(samples) -> ScalingFit | None:
    try:
        return fit_exponent(samples)
    except InsufficientDataError:
        return None


def _run_series(cfg: RunConfig, t0: float) -> int:
    m = cfg.map_params()
    sol = expand(m, cfg.order)
    first = verify_first_order(sol, m)
    payload = dict(sol.to_dict())
    payload["first_order_check"] = {"delta1_error": first.delta1_error,
                                    "y1_error": first.y1_error}
    if sol.r is not None:
        per = verify_periodicity(sol, m)
        payload["periodicity_check"] = {
            "shift_residual": per.shift_residual,
            "norm": per.norm,
            "support": sorted(per.support),
            "support_multiples_of_q": per.support_multiples_of_q,
        }
    _write_json(cfg, t0, payload, cfg.out)
    return 0


def _run_chain(cfg: RunConfig, t0: float) -> int:
    c = cfg.chain_params()
    dt = cfg.dt if cfg.dt > 0 else default_dt(c)
    report: dict = {"kind": None, "mean_velocity": None, "T": None,
                    "delay_error": None, "critical_delta": None}
    if cfg.bracket:
        if len(cfg.bracket) != 2:
            raise UsageError("--bracket needs exactly two values lo,hi")
        crit = critical_torque(c, (cfg.bracket[0], cfg.bracket[1]),
                               horizon=cfg.horizon)
        report["critical_delta"] = crit
    else:
        s0 = twist_state(c)
        rep = classify_attractor(s0, c, horizon=cfg.horizon, dt=dt)
        report.update({"kind": rep.kind, "mean_velocity": rep.mean_velocity,
                       "T": rep.wave_period, "delay_error": rep.delay_error})
        if cfg.out:
            t_end = cfg.t_end if cfg.t_end > 0 else 200.0
            traj = integrate(twist_state(c), c, dt, t_end,
                             record_every=max(1, int(round(1.0 / dt))))
            header = ("t," + ",".join(f"x_{k}" for k in range(c.q))
                      + "," + ",".join(f"v_{k}" for k in range(c.q)))
            rows = [tuple([float(tt)] + [float(v) for v in xx] + [float(v) for v in vv])
                    for tt, xx, vv in zip(traj.times, traj.pos, traj.vel)]
            if cfg.format == "svg":
                dataset = {"t": [float(v) for v in traj.times],
                           "x": [list(map(float, traj.pos[:, k])) for k in range(c.q)]}
                emit_svg(dataset, "trajectory", cfg.out, _svg_meta(cfg))
            else:
                _write_csv(cfg, t0, header, rows, cfg.out)
    _write_json(cfg, t0, report, cfg.report)
    return 0


def _run_fit(cfg: RunConfig, t0: float) -> int:
    if not cfg.input:
        raise UsageError("fit requires --input CSV (eps,width,... rows)")
    samples = []
    with open(cfg.input, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("eps"):
                continue
            parts = line.split(",")
            samples.append(TongueSample(float(parts[0]), float(parts[1]),
                                        *(float(v) for v in parts[2:6])))
    fit = fit_exponent(samples)
    expected_r = None
    try:
        sol = expand(cfg.map_params(), cfg.order)
        expected_r = sol.r
    except (ValueError, LeadingIndexNotFound):
        pass
    _write_json(cfg, t0, {"exponent": fit.exponent, "residual": fit.residual,
                          "expected_r": expected_r,
                          "log_prefactor": fit.log_prefactor,
                          "eps_range": list(fit.eps_range)}, cfg.out)
    return 0


# -- argument parsing -----------------------------------------------------

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="key=value config file; flags override it")
    sp.add_argument("--f", help="forcing term: sin, cos, 'sin 2x', or "
                                '{"cos":[...],"sin":[...]} (default sin)')
    sp.add_argument("--q", type=int, help="orbit period / chain length (default 1)")
    sp.add_argument("--p", type=int, help="winding number / chain twist (default 0)")
    sp.add_argument("--eps", help="perturbation strength, comma list (default 0.1)")
    sp.add_argument("--delta", type=float, help="drift / torque (default 0)")
    sp.add_argument("--order", type=int, help="series truncation order (default 4)")
    sp.add_argument("--grid", type=int, help="x0 grid size (default 64)")
    sp.add_argument("--gamma", type=float, help="chain damping (default 0.5)")
    sp.add_argument("--dt", type=float, help="chain time step (default: auto)")
    sp.add_argument("--horizon", type=float,
                    help="chain classification horizon (default 1e5)")
    sp.add_argument("--jobs", type=int, help="parallel workers (default 1)")
    sp.add_argument("--format", choices=("csv", "json", "svg"),
                    help="output format (default csv)")
    sp.add_argument("--out", help="output path (default: stdout)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tonguelab",
        description="Periodic orbits and Arnold tongues of drifted standard "
                    "maps, plus the damped sine-Gordon chain.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="subcommand", required=True)
    descriptions = {
        "orbit": "find all p/q orbits at fixed drift (JSON)",
        "profile": "drift profile over x0 at fixed eps",
        "tongue": "tongue width sweep over an eps list",
        "series": "eps-series expansion of the drift profile (JSON)",
        "chain": "integrate / classify the twisted sine-Gordon chain",
        "fit": "power-law fit of a width CSV",
    }
    for name, desc in descriptions.items():
        sp = subs.add_parser(name, help=desc, description=desc)
        _add_common(sp)
        if name == "chain":
            sp.add_argument("--bracket", help="lo,hi torque bracket: measure the "
                                              "critical torque instead of classifying")
            sp.add_argument("--report", help="path for the JSON report "
                                             "(default: stdout)")
            sp.add_argument("--t-end", dest="t_end", type=float,
                            help="trajectory CSV length in time units (default 200)")
        if name == "fit":
            sp.add_argument("--input", help="width CSV produced by the tongue command")
    return parser


def run(argv: list[str] | None = None) -> int:
    """Entry point returning the process exit code."""
    parser = make_parser()
    args = parser.parse_args(argv)
    t0 = time.time()
    try:
        cfg = build_config(args)
        runner = {"orbit": _run_orbit, "profile": _run_profile,
                  "tongue": _run_tongue, "series": _run_series,
                  "chain": _run_chain, "fit": _run_fit}[cfg.subcommand]
        return runner(cfg, t0)
    except UsageError as exc:
        print(f"tonguelab: usage error: {exc}", file=sys.stderr)
        return _USAGE_ERROR
    except (ValueError,) as exc:
        print(f"tonguelab: usage error: {exc}", file=sys.stderr)
        return _USAGE_ERROR
    except (ContinuationError, SingularJacobianError, LeadingIndexNotFound,
            InsufficientDataError, BlowUpError, InvalidBracketError,
            RuntimeError) as exc:
        print(f"tonguelab: numerical failure: {exc}", file=sys.stderr)
        return _NUMERIC_ERROR
    except OSError as exc:
        print(f"tonguelab: {exc}", file=sys.stderr)
        return _NUMERIC_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
