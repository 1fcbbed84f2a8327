"""Command-line front end: verification and solving workflows.

Every subcommand prints a machine-readable `STATUS=PASS|FAIL` as its last
line and exits 0 iff the requested checks pass.  A config file holds one
`key=value` per line (`#` comments); command-line flags override it.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .hgroup import point
from .fields import ScalarField, make_gauge_power, parse_polynomial
from .gaugeball import (
    CONSTANT_SOURCES, BallSpec, QuadratureSpec, SearchConfig, alpha_beta,
    ball_average, ball_volume, ball_volume_estimate, c_constant, coefficients,
)
from .mvp import (
    classify_field, verify_extrema_limits, verify_residual_limit,
)
from .solver import GridProblem, dirichlet_solve, error_report


def _fmt(value: float, digits: int) -> str:
    return format(value, f".{digits}g")


def parse_field(spec: str, n: int = 1) -> ScalarField:
    """Field specs: a polynomial in x,y,t (x1..,y1.. for n=2) or gauge:GAMMA."""
    spec = spec.strip()
    if spec.startswith("gauge:"):
        return make_gauge_power(float(spec[len("gauge:"):]), n)
    return parse_polynomial(spec, n)


def _parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_points(text: str, n: int):
    pts = []
    for blob in text.split(";"):
        blob = blob.strip()
        if not blob:
            continue
        coords = _parse_floats(blob)
        if len(coords) != 2 * n + 1:
            raise ValueError(f"each point needs {2 * n + 1} coordinates")
        pts.append(point(*coords))
    if not pts:
        raise ValueError("no points given")
    return pts


def load_config(path: str) -> dict:
    """Read key=value lines; '#' starts a comment, blank lines are skipped."""
    out = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


@dataclass
class RunConfig:
    """Validated per-run settings handed to the command functions."""

    command: str
    n: int = 1
    p: float = 2.0
    constant_source: str = "calibrated"
    field: Optional[str] = None
    center: str = "0,0,0"
    eps: Optional[float] = None
    eps_list: Optional[str] = None
    quad: Optional[str] = None
    seed: int = 0
    digits: int = 12
    tol: float = 0.02
    output: Optional[str] = None
    args: Optional[argparse.Namespace] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__ if f != "args"}
        picked = {k: v for k, v in vars(args).items()
                  if k in known and v is not None}
        return cls(args=args, **picked)

    def center_point(self):
        coords = _parse_floats(self.center)
        if len(coords) != 2 * self.n + 1:
            raise ValueError(f"--center needs {2 * self.n + 1} coordinates")
        return point(*coords)

    def eps_values(self) -> tuple:
        if self.eps_list:
            eps = _parse_floats(self.eps_list)
        elif self.eps is not None:
            eps = (self.eps,)
        else:
            raise ValueError("need --eps or --eps-list")
        if any(e <= 0 for e in eps):
            raise ValueError("eps values must be positive")
        return eps

    def quad_spec(self) -> Optional[QuadratureSpec]:
        return QuadratureSpec.parse(self.quad) if self.quad else None


def _emit_csv(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _finish(ok: bool) -> int:
    print("STATUS=PASS" if ok else "STATUS=FAIL")
    return 0 if ok else 1


def cmd_constants(cfg: RunConfig) -> int:
    d = cfg.digits
    print(f"n={cfg.n} p={_fmt(cfg.p, d)}")
    for source in CONSTANT_SOURCES:
        print(f"C[{source}]={_fmt(c_constant(cfg.n, source), d)}")
    co = alpha_beta(cfg.n, cfg.p, c_constant(cfg.n, cfg.constant_source),
                    cfg.constant_source)
    print(f"source={cfg.constant_source} alpha={_fmt(co.alpha, d)} "
          f"beta={_fmt(co.beta, d)}")
    return _finish(True)


def cmd_volume(cfg: RunConfig) -> int:
    d = cfg.digits
    eps = cfg.eps if cfg.eps is not None else 1.0
    exact = ball_volume(cfg.n, eps)
    samples = cfg.args.samples
    estimate = ball_volume_estimate(cfg.n, eps, samples=samples,
                                    seed=cfg.seed)
    rel = abs(estimate - exact) / exact
    scaling = abs(ball_volume(cfg.n, eps)
                  - eps ** (2 * cfg.n + 2) * ball_volume(cfg.n, 1.0)) / exact
    print(f"volume_exact={_fmt(exact, d)}")
    print(f"volume_estimate={_fmt(estimate, d)} samples={samples}")
    print(f"rel_diff={_fmt(rel, d)}")
    print(f"scaling_defect={_fmt(scaling, d)}")
    return _finish(rel <= cfg.args.rtol and scaling <= 1e-12)


def cmd_average(cfg: RunConfig) -> int:
    d = cfg.digits
    u = parse_field(cfg.field, cfg.n)
    res = ball_average(u, BallSpec(cfg.center_point(), cfg.eps_values()[0]),
                       cfg.quad_spec())
    print(f"average={_fmt(res.value, d)}")
    print(f"error_estimate={_fmt(res.error, d)} nodes={res.nodes}")
    return _finish(True)


def cmd_extrema(cfg: RunConfig) -> int:
    d = cfg.digits
    u = parse_field(cfg.field, cfg.n)
    eps = sorted(cfg.eps_values(), reverse=True)
    report = verify_extrema_limits(u, cfg.center_point(), eps,
                                   SearchConfig(seed=cfg.seed))
    _emit_csv(report.csv_text(), cfg.output)
    dir_err = max(report.scalars["max_dir_err_extrapolated"],
                  report.scalars["min_dir_err_extrapolated"])
    gap = report.scalars["antipodal_gap_extrapolated"]
    t_pred = report.predicted_limit
    t_err = abs(report.fitted_limit - t_pred) / max(1.0, abs(t_pred))
    print(f"direction_error={_fmt(dir_err, d)}")
    print(f"antipodal_gap={_fmt(gap, d)}")
    print(f"t_limit_fitted={_fmt(report.fitted_limit, d)} "
          f"predicted={_fmt(t_pred, d)}")
    return _finish(max(dir_err, gap, t_err) <= cfg.tol)


def cmd_residual(cfg: RunConfig) -> int:
    d = cfg.digits
    u = parse_field(cfg.field, cfg.n)
    eps = sorted(cfg.eps_values(), reverse=True)
    co = coefficients(cfg.n, cfg.p, cfg.constant_source)
    report = verify_residual_limit(u, cfg.center_point(), eps, coeffs=co,
                                   quad=cfg.quad_spec(),
                                   search=SearchConfig(seed=cfg.seed))
    _emit_csv(report.csv_text(), cfg.output)
    gap = abs(report.fitted_limit - report.predicted_limit)
    tol = cfg.tol * (1.0 + abs(report.predicted_limit))
    print(f"fitted_limit={_fmt(report.fitted_limit, d)}")
    print(f"predicted_limit={_fmt(report.predicted_limit, d)}")
    print(f"gap={_fmt(gap, d)} tol={_fmt(tol, d)}")
    return _finish(gap <= tol)


def cmd_classify(cfg: RunConfig) -> int:
    u = parse_field(cfg.field, cfg.n)
    pts = _parse_points(cfg.args.points, cfg.n)
    eps = sorted(cfg.eps_values(), reverse=True)
    co = coefficients(cfg.n, cfg.p, cfg.constant_source)
    report = classify_field(u, pts, cfg.p, coeffs=co, eps_seq=eps,
                            search=SearchConfig(seed=cfg.seed))
    d = cfg.digits
    for v in report.verdicts:
        if v.degenerate:
            print("point degenerate-gradient skipped")
            continue
        word = "harmonic" if v.harmonic else "inharmonic"
        print(f"point {word} residual_limit={_fmt(v.residual_limit, d)} "
              f"core={_fmt(v.core, d)} consistent={v.sign_consistent}")
    print(str(report))
    ok = all(v.sign_consistent for v in report.verdicts if not v.degenerate)
    expect = cfg.args.expect
    if expect:
        ok = ok and (report.harmonic == (expect == "harmonic"))
    return _finish(ok)


def cmd_solve(cfg: RunConfig) -> int:
    d = cfg.digits
    a = cfg.args
    g = parse_field(a.boundary, 1)
    co = coefficients(1, cfg.p, cfg.constant_source)
    box = _parse_floats(a.box)
    if len(box) != 2:
        raise ValueError("--box needs two numbers a,b")
    hole = None
    if a.hole:
        hole = _parse_floats(a.hole)
        if len(hole) != 2:
            raise ValueError("--hole needs two numbers c,d")
    h_t = a.ht if a.ht is not None else a.h * a.h
    problem = GridProblem(box=box, h_xy=a.h, h_t=h_t, eps=cfg.eps,
                          coeffs=co, boundary=g, hole=hole,
                          tolerance=a.solver_tol, max_iterations=a.max_iter,
                          theta=a.theta)
    solution = dirichlet_solve(problem)
    print(f"lattice={problem.shape[0]}x{problem.shape[1]}x{problem.shape[2]}")
    print(f"iterations={solution.iterations} "
          f"final_update={_fmt(solution.final_update, d)} "
          f"converged={solution.converged}")
    ok = solution.converged
    if a.reference:
        ref = parse_field(a.reference, 1)
        sup, mean = error_report(solution, ref)
        print(f"sup_error={_fmt(sup, d)} mean_error={_fmt(mean, d)}")
        ok = ok and sup <= a.check_tol
    if cfg.output:
        solution.to_csv(cfg.output)
        print(f"grid_csv={cfg.output}")
    return _finish(ok)


_COMMANDS = {
    "constants": cmd_constants,
    "volume": cmd_volume,
    "average": cmd_average,
    "extrema": cmd_extrema,
    "residual": cmd_residual,
    "classify": cmd_classify,
    "solve": cmd_solve,
}


def _add_common(sub, *, field=False, center=False, eps=False,
                eps_list=False, quad=False, p=False):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--n", type=int, default=1, choices=(1, 2))
    sub.add_argument("--constant", dest="constant_source",
                     default="calibrated", choices=CONSTANT_SOURCES)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--digits", type=int, default=12,
                     help="significant digits in printed values")
    sub.add_argument("--output", help="write CSV here instead of stdout")
    if p:
        sub.add_argument("--p", type=float, default=2.0)
    if field:
        sub.add_argument("--field", required=False,
                         help="polynomial in x,y,t or gauge:GAMMA")
    if center:
        sub.add_argument("--center", default="0,0,0",
                         help="comma-separated coordinates")
    if eps:
        sub.add_argument("--eps", type=float)
    if eps_list:
        sub.add_argument("--eps-list", dest="eps_list",
                         help="comma-separated ball radii")
    if quad:
        sub.add_argument("--quad",
                         help="product:NPHI,NR,NA or lds:SAMPLES:seed=K")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hmvp",
        description="Mean-value calculus and p-harmonic checks on the "
                    "Heisenberg group")
    subs = parser.add_subparsers(dest="command", required=True)
    table = {}

    s = subs.add_parser("constants", help="C, alpha, beta for given n and p")
    _add_common(s, p=True)
    table["constants"] = s

    s = subs.add_parser("volume", help="gauge-ball volume: exact vs sampled")
    _add_common(s, eps=True)
    s.add_argument("--samples", type=int, default=10_000_000)
    s.add_argument("--rtol", type=float, default=0.002)
    table["volume"] = s

    s = subs.add_parser("average", help="ball average of a field")
    _add_common(s, field=True, center=True, eps=True, quad=True)
    table["average"] = s

    s = subs.add_parser("extrema", help="scaled extremum locations vs limits")
    _add_common(s, field=True, center=True, eps_list=True)
    s.add_argument("--tol", type=float, default=0.02)
    table["extrema"] = s

    s = subs.add_parser("residual", help="R(eps)/eps^2 vs the predicted limit")
    _add_common(s, field=True, center=True, eps_list=True, quad=True, p=True)
    s.add_argument("--tol", type=float, default=0.02)
    table["residual"] = s

    s = subs.add_parser("classify", help="p-harmonicity verdict on points")
    _add_common(s, field=True, eps_list=True, p=True)
    s.add_argument("--points", required=True,
                   help="semicolon-separated points, e.g. '1,0,0;0.5,0.5,0'")
    s.add_argument("--expect", choices=("harmonic", "inharmonic"))
    table["classify"] = s

    s = subs.add_parser("solve", help="lattice Dirichlet solve (n=1)")
    _add_common(s, eps=True, p=True)
    s.add_argument("--boundary", required=True,
                   help="boundary field: polynomial or gauge:GAMMA")
    s.add_argument("--box", default="-1,1")
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--ht", type=float, help="t spacing, default h^2")
    s.add_argument("--hole", help="frozen inner box c,d")
    s.add_argument("--solver-tol", dest="solver_tol", type=float,
                   default=1e-8)
    s.add_argument("--max-iter", dest="max_iter", type=int, default=500)
    s.add_argument("--theta", type=float)
    s.add_argument("--reference", help="field to measure the error against")
    s.add_argument("--check-tol", dest="check_tol", type=float, default=1e-6)
    table["solve"] = s

    return parser, table


def _typed(action: argparse.Action, raw: str):
    if isinstance(action, (argparse._StoreTrueAction,
                           argparse._StoreFalseAction)):
        return raw.lower() in ("1", "true", "yes", "on")
    return action.type(raw) if action.type else raw


def _apply_config(sub: argparse.ArgumentParser, cfg: dict) -> None:
    actions = {act.dest: act for act in sub._actions}
    unknown = [k for k in cfg if k not in actions]
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    sub.set_defaults(**{k: _typed(actions[k], v) for k, v in cfg.items()})


def _cap_threads() -> None:
    cap = os.environ.get("HMVP_THREADS")
    if not cap:
        return
    try:
        import numba
        numba.set_num_threads(max(1, min(int(cap),
                                         numba.config.NUMBA_NUM_THREADS)))
    except (ImportError, ValueError):
        pass


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    _cap_threads()
    parser, table = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            _apply_config(table[args.command], load_config(args.config))
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        args = parser.parse_args(argv)
    if getattr(args, "p", None) is not None and args.p <= 1.0:
        parser.error("--p must be > 1")
    cfg = RunConfig.from_args(args)
    try:
        return _COMMANDS[args.command](cfg)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _finish(False)


if __name__ == "__main__":
    sys.exit(main())
