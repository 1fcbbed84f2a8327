"""Asymptotic mean-value verification harness.

Everything here measures one of four limits as eps -> 0 over gauge balls
B(P, eps): the mean-value constant estimate, the location of ball extrema,
the two-sided quadratic expansion of the averaged residual, and the residual
limit R(eps)/eps^2 itself.  Limits are extrapolated from a geometric
eps-sequence by a linear least-squares fit in eps, since the next-order
correction is generically O(eps) for anisotropic fields.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .hgroup import Point, horizontal_gradient, horizontal_hessian_sym
from .fields import ScalarField, left_translate_field
from .operators import DegenerateGradientError, delta_h, delta_inf, delta_p
from .gaugeball import (
    BallSpec, MVPCoefficients, QuadratureSpec, SearchConfig, ball_average,
    ball_extrema, c_constant,
)

DEFAULT_EPS0 = 0.4
DEFAULT_EPS_COUNT = 6


def eps_sequence(eps0: float = DEFAULT_EPS0, count: int = DEFAULT_EPS_COUNT,
                 ratio: float = 0.5) -> np.ndarray:
    """Geometric eps-sequence eps0 * ratio^k, k = 0..count-1."""
    if eps0 <= 0.0 or count < 1 or not 0.0 < ratio < 1.0:
        raise ValueError("need eps0 > 0, count >= 1, 0 < ratio < 1")
    return eps0 * ratio ** np.arange(count, dtype=float)


def fit_limit(eps: np.ndarray, values: np.ndarray
              ) -> tuple[float, Optional[float], float]:
    """Extrapolate values(eps) to eps = 0.

    Returns (limit, order, fit_error): limit is the intercept of the linear
    fit values ~ L + a*eps, order the slope of log|values - L| against
    log eps (None when deviations sit at roundoff), fit_error the max
    absolute fit deviation.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if eps.shape != values.shape or eps.ndim != 1:
        raise ValueError("eps and values must be 1-d arrays of equal length")
    if len(eps) == 1:
        return float(values[0]), None, 0.0
    slope, intercept = np.polyfit(eps, values, 1)
    limit = float(intercept)
    fit_error = float(np.max(np.abs(values - (intercept + slope * eps))))
    dev = np.abs(values - limit)
    mask = dev > 1e-13 * (1.0 + abs(limit))
    order: Optional[float] = None
    if mask.sum() >= 2:
        order = float(np.polyfit(np.log(eps[mask]), np.log(dev[mask]), 1)[0])
    return limit, order, fit_error


@dataclass(frozen=True)
class ExpansionReport:
    """Per-eps measurements plus extrapolated and predicted limits.

    Typed arrays cover the fields every verification shares; series carries
    operation-specific per-eps columns and scalars the named diagnostics.
    Arrays not measured by an operation are None, never NaN-filled.
    """

    kind: str
    n: int
    eps: np.ndarray
    avg: Optional[np.ndarray] = None
    min_value: Optional[np.ndarray] = None
    max_value: Optional[np.ndarray] = None
    residual: Optional[np.ndarray] = None
    residual_over_eps2: Optional[np.ndarray] = None
    max_scaled_xy: Optional[np.ndarray] = None
    min_scaled_xy: Optional[np.ndarray] = None
    max_t_over_eps3: Optional[np.ndarray] = None
    min_t_over_eps3: Optional[np.ndarray] = None
    predicted_limit: Optional[float] = None
    fitted_limit: Optional[float] = None
    fitted_order: Optional[float] = None
    series: Mapping[str, np.ndarray] = field(default_factory=dict, compare=False)
    scalars: Mapping[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=float)
        if eps.ndim != 1 or len(eps) == 0:
            raise ValueError("eps must be a nonempty 1-d array")
        if np.any(np.diff(eps) >= 0.0):
            raise ValueError("eps must be strictly decreasing")
        object.__setattr__(self, "eps", eps)
        k = len(eps)
        for name in ("avg", "min_value", "max_value", "residual",
                     "residual_over_eps2", "max_t_over_eps3",
                     "min_t_over_eps3"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (k,):
                raise ValueError(f"{name} must have one entry per eps")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, arr)
        for name in ("max_scaled_xy", "min_scaled_xy"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (k, 2 * self.n) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite with shape (len(eps), 2n)")
            object.__setattr__(self, name, arr)
        for val in (self.predicted_limit, self.fitted_limit, self.fitted_order):
            if val is not None and not math.isfinite(val):
                raise ValueError("report limits must be finite when present")

    def to_csv(self, target) -> None:
        """Write the per-eps table; target is a path or a text file object."""
        own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
        handle = open(target, "w", newline="") if own else target
        try:
            xi_cols = [f"xi_over_eps_{i + 1}" for i in range(2 * self.n)]
            writer = csv.writer(handle)
            writer.writerow(["eps", "avg", "min", "max", "R", "R_over_eps2",
                             *xi_cols, "t_over_eps3", "predicted_limit"])

            def cell(arr, i):
                return format(arr[i], ".12g") if arr is not None else ""

            for i in range(len(self.eps)):
                row = [format(self.eps[i], ".12g"),
                       cell(self.avg, i), cell(self.min_value, i),
                       cell(self.max_value, i), cell(self.residual, i),
                       cell(self.residual_over_eps2, i)]
                if self.max_scaled_xy is not None:
                    row.extend(format(v, ".12g") for v in self.max_scaled_xy[i])
                else:
                    row.extend("" for _ in xi_cols)
                row.append(cell(self.max_t_over_eps3, i))
                row.append(format(self.predicted_limit, ".12g")
                           if self.predicted_limit is not None else "")
                writer.writerow(row)
        finally:
            if own:
                handle.close()

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def _residual_parts(u: ScalarField, P: Point, eps: float,
                    coeffs: MVPCoefficients,
                    quad: Optional[QuadratureSpec],
                    search: Optional[SearchConfig]):
    ball = BallSpec(P, eps)
    avg = ball_average(u, ball, quad).value
    ext = ball_extrema(u, ball, search)
    res = (coeffs.alpha / 2.0 * (ext.min_value + ext.max_value)
           + coeffs.beta * avg - u.evaluate(P))
    return avg, ext, res


def expansion_residual(u: ScalarField, P: Point, eps: float,
                       coeffs: MVPCoefficients,
                       quad: Optional[QuadratureSpec] = None,
                       search: Optional[SearchConfig] = None) -> float:
    """R(eps) = (alpha/2)(min + max over closed B(P, eps)) + beta avg - u(P)."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    return _residual_parts(u, P, eps, coeffs, quad, search)[2]


def verify_residual_limit(u: ScalarField, P: Point,
                          eps_seq: Optional[Sequence[float]] = None, *,
                          coeffs: MVPCoefficients,
                          quad: Optional[QuadratureSpec] = None,
                          search: Optional[SearchConfig] = None
                          ) -> ExpansionReport:
    """Measure R(eps)/eps^2 along an eps-sequence and extrapolate.

    The predicted limit is beta C ((p-2) Delta_inf + Delta_H) u(P) when the
    horizontal gradient at P is nondegenerate, beta C Delta_H u(P) with the
    anisotropy term dropped otherwise (the correct smooth-point limit when
    the field is an exact fixed point of the averaging).
    """
    eps = np.asarray(eps_sequence() if eps_seq is None else eps_seq, float)
    v = left_translate_field(u, P)
    origin = Point(np.zeros(u.n), np.zeros(u.n), 0.0)
    avgs, mins, maxs, ress = [], [], [], []
    mxy, nxy, mt3, nt3 = [], [], [], []
    for e in eps:
        avg, ext, res = _residual_parts(v, origin, float(e), coeffs, quad, search)
        avgs.append(avg)
        mins.append(ext.min_value)
        maxs.append(ext.max_value)
        ress.append(res)
        mxy.append(ext.max_scaled_xy)
        nxy.append(ext.min_scaled_xy)
        mt3.append(ext.max_t_over_eps3)
        nt3.append(ext.min_t_over_eps3)
    r2 = np.asarray(ress) / eps ** 2
    limit, order, fit_err = fit_limit(eps, r2)
    try:
        core = delta_p(u, P, coeffs.p).core
    except DegenerateGradientError:
        core = delta_h(u, P)
    predicted = coeffs.beta * coeffs.C * core
    return ExpansionReport(
        kind="residual", n=u.n, eps=eps, avg=np.asarray(avgs),
        min_value=np.asarray(mins), max_value=np.asarray(maxs),
        residual=np.asarray(ress), residual_over_eps2=r2,
        max_scaled_xy=np.asarray(mxy), min_scaled_xy=np.asarray(nxy),
        max_t_over_eps3=np.asarray(mt3), min_t_over_eps3=np.asarray(nt3),
        predicted_limit=float(predicted), fitted_limit=limit,
        fitted_order=order, scalars={"fit_error": fit_err})


def verify_mean_value_constant(u: ScalarField, P: Point,
                               eps_seq: Optional[Sequence[float]] = None,
                               quad: Optional[QuadratureSpec] = None
                               ) -> ExpansionReport:
    """Estimate C(n) from avg_{B(P,eps)} u = u(P) + C(n) Delta_H u(P) eps^2 + o(eps^2)."""
    eps = np.asarray(eps_sequence() if eps_seq is None else eps_seq, float)
    dh = delta_h(u, P)
    u0 = u.evaluate(P)
    if abs(dh) <= 1e-8 * (1.0 + abs(u0)):
        raise ArithmeticError(
            "degenerate mean-value estimate: Delta_H u(P) is approximately 0")
    avgs = np.array([ball_average(u, BallSpec(P, float(e)), quad).value
                     for e in eps])
    c_hat = (avgs - u0) / (dh * eps ** 2)
    limit, order, fit_err = fit_limit(eps, c_hat)
    return ExpansionReport(
        kind="mean-value-constant", n=u.n, eps=eps, avg=avgs,
        predicted_limit=c_constant(u.n, "calibrated"),
        fitted_limit=limit, fitted_order=order,
        series={"c_hat": c_hat},
        scalars={"delta_h": dh, "fit_error": fit_err})


def verify_extrema_limits(u: ScalarField, P: Point,
                          eps_seq: Optional[Sequence[float]] = None,
                          search: Optional[SearchConfig] = None
                          ) -> ExpansionReport:
    """Track where ball extrema sit as eps -> 0.

    Scaled max locations converge to +nu = grad_H u / |grad_H u|, min
    locations to -nu, and |t_eps| / eps^3 to 2 |u_t| / |grad_H u|, which is
    half the imaginary curvature modulus of the level surface through P.
    """
    eps = np.asarray(eps_sequence() if eps_seq is None else eps_seq, float)
    grad = horizontal_gradient(u, P)
    gnorm = grad.norm()
    if gnorm <= 1e-8 * (1.0 + abs(u.evaluate(P))):
        raise DegenerateGradientError("horizontal gradient vanishes at P")
    nu = grad.coefficients / gnorm
    u_t = float(u.gradient(P.as_array()[None, :])[0, 2 * u.n])
    t_limit_predicted = 2.0 * abs(u_t) / gnorm
    v = left_translate_field(u, P)
    origin = Point(np.zeros(u.n), np.zeros(u.n), 0.0)
    mins, maxs, mxy, nxy, mt3, nt3 = [], [], [], [], [], []
    for e in eps:
        ext = ball_extrema(v, BallSpec(origin, float(e)), search)
        mins.append(ext.min_value)
        maxs.append(ext.max_value)
        mxy.append(ext.max_scaled_xy)
        nxy.append(ext.min_scaled_xy)
        mt3.append(ext.max_t_over_eps3)
        nt3.append(ext.min_t_over_eps3)
    mxy = np.asarray(mxy)
    nxy = np.asarray(nxy)
    mt3 = np.asarray(mt3)
    nt3 = np.asarray(nt3)
    dir_err_max = np.linalg.norm(mxy - nu, axis=1)
    dir_err_min = np.linalg.norm(nxy + nu, axis=1)
    antipodal_gap = np.linalg.norm(mxy + nxy, axis=1)
    t_limit, t_order, _ = fit_limit(eps, mt3)
    # extrapolate each scaled coordinate, then compare against +/- nu
    max_dir_limit = np.array([fit_limit(eps, mxy[:, j])[0]
                              for j in range(2 * u.n)])
    min_dir_limit = np.array([fit_limit(eps, nxy[:, j])[0]
                              for j in range(2 * u.n)])
    return ExpansionReport(
        kind="extrema-limits", n=u.n, eps=eps,
        min_value=np.asarray(mins), max_value=np.asarray(maxs),
        max_scaled_xy=mxy, min_scaled_xy=nxy,
        max_t_over_eps3=mt3, min_t_over_eps3=nt3,
        predicted_limit=t_limit_predicted,
        fitted_limit=t_limit, fitted_order=t_order,
        series={"dir_err_max": dir_err_max, "dir_err_min": dir_err_min,
                "antipodal_gap": antipodal_gap, "min_t_over_eps3": nt3},
        scalars={
            "t_limit_predicted": t_limit_predicted,
            "half_curvature_modulus": 0.5 * (4.0 * abs(u_t) / gnorm),
            "max_dir_err_extrapolated":
                float(np.linalg.norm(max_dir_limit - nu)),
            "min_dir_err_extrapolated":
                float(np.linalg.norm(min_dir_limit + nu)),
            "antipodal_gap_extrapolated":
                float(np.linalg.norm(max_dir_limit + min_dir_limit)),
            "t_limit_fitted": t_limit,
        })


def verify_two_sided_expansion(u: ScalarField, P: Point,
                               eps_seq: Optional[Sequence[float]] = None, *,
                               coeffs: MVPCoefficients,
                               quad: Optional[QuadratureSpec] = None,
                               search: Optional[SearchConfig] = None
                               ) -> ExpansionReport:
    """Check the two-sided quadratic expansion sandwiching R(eps).

    With H the symmetrized horizontal Hessian at P and (h, l) the scaled
    horizontal offset of a ball extremum, the upper bound evaluates the
    quadratic form at the max point and the lower bound at the min point:

        beta C eps^2 [Delta_H u + (p-2) <H (h,l), (h,l)>]  vs  R(eps)

    For p >= 2 the max-point form dominates R and the min-point form is
    dominated, both up to o(eps^2); for p in (1, 2) the inequalities
    reverse.  Operationally the gap (LHS - R)/eps^2 must extrapolate to a
    limit of the right sign (or zero).
    """
    eps = np.asarray(eps_sequence() if eps_seq is None else eps_seq, float)
    p = coeffs.p
    grad = horizontal_gradient(u, P)
    if grad.norm() <= 1e-8 * (1.0 + abs(u.evaluate(P))):
        raise DegenerateGradientError("horizontal gradient vanishes at P")
    hess = horizontal_hessian_sym(u, P).entries
    dh = float(np.trace(hess))
    v = left_translate_field(u, P)
    origin = Point(np.zeros(u.n), np.zeros(u.n), 0.0)
    avgs, mins, maxs, ress = [], [], [], []
    mxy, nxy, mt3, nt3, ups, los = [], [], [], [], [], []
    for e in eps:
        avg, ext, res = _residual_parts(v, origin, float(e), coeffs, quad, search)
        hM = ext.max_scaled_xy
        hm = ext.min_scaled_xy
        lhs_M = coeffs.beta * coeffs.C * e * e * (dh + (p - 2.0) * hM @ hess @ hM)
        lhs_m = coeffs.beta * coeffs.C * e * e * (dh + (p - 2.0) * hm @ hess @ hm)
        avgs.append(avg)
        mins.append(ext.min_value)
        maxs.append(ext.max_value)
        ress.append(res)
        mxy.append(hM)
        nxy.append(hm)
        mt3.append(ext.max_t_over_eps3)
        nt3.append(ext.min_t_over_eps3)
        ups.append((lhs_M - res) / (e * e))
        los.append((lhs_m - res) / (e * e))
    eps_a = eps
    r2 = np.asarray(ress) / eps_a ** 2
    upper_gap = np.asarray(ups)
    lower_gap = np.asarray(los)
    if p < 2.0:
        # alpha < 0 branch: the sandwich flips side for side
        upper_gap, lower_gap = lower_gap, upper_gap
    upper_limit, _, _ = fit_limit(eps_a, upper_gap)
    lower_limit, _, _ = fit_limit(eps_a, lower_gap)
    limit, order, fit_err = fit_limit(eps_a, r2)
    dinf = delta_inf(u, P)
    predicted = coeffs.beta * coeffs.C * ((p - 2.0) * dinf + dh)
    return ExpansionReport(
        kind="two-sided-expansion", n=u.n, eps=eps_a, avg=np.asarray(avgs),
        min_value=np.asarray(mins), max_value=np.asarray(maxs),
        residual=np.asarray(ress), residual_over_eps2=r2,
        max_scaled_xy=np.asarray(mxy), min_scaled_xy=np.asarray(nxy),
        max_t_over_eps3=np.asarray(mt3), min_t_over_eps3=np.asarray(nt3),
        predicted_limit=float(predicted), fitted_limit=limit,
        fitted_order=order,
        series={"upper_gap": upper_gap, "lower_gap": lower_gap},
        scalars={"upper_gap_limit": upper_limit,
                 "lower_gap_limit": lower_limit,
                 "fit_error": fit_err})


@dataclass(frozen=True)
class PointVerdict:
    point: Point
    residual_limit: Optional[float]
    core: Optional[float]
    tolerance: Optional[float]
    harmonic: Optional[bool]
    sign_consistent: Optional[bool]
    degenerate: bool


@dataclass(frozen=True)
class ClassificationReport:
    p: float
    verdicts: tuple
    harmonic: bool
    skipped: int

    def __str__(self):
        word = "p-harmonic" if self.harmonic else "not p-harmonic"
        return (f"{word} on sample (p={self.p:g}, "
                f"{len(self.verdicts) - self.skipped} points checked, "
                f"{self.skipped} degenerate skipped)")


def classify_field(u: ScalarField, points: Sequence[Point], p: float, *,
                   coeffs: Optional[MVPCoefficients] = None,
                   eps_seq: Optional[Sequence[float]] = None,
                   quad: Optional[QuadratureSpec] = None,
                   search: Optional[SearchConfig] = None
                   ) -> ClassificationReport:
    """Declare u p-harmonic on the sample iff R(eps)/eps^2 extrapolates to 0.

    The per-point tolerance is 1e-3 (1 + |Delta_H u| + |Delta_inf u|); the
    verdict is cross-checked against the sign of the operator core
    (p-2) Delta_inf u + Delta_H u.  Points with a degenerate horizontal
    gradient are skipped and counted.
    """
    if coeffs is None:
        from .gaugeball import coefficients as make_coeffs
        coeffs = make_coeffs(u.n, p)
    if coeffs.p != p:
        raise ValueError("coeffs.p disagrees with requested p")
    verdicts = []
    skipped = 0
    all_ok = True
    for P in points:
        dh = delta_h(u, P)
        if p == 2.0:
            # the core is gradient-free at p = 2
            dinf = 0.0
        else:
            try:
                dinf = delta_inf(u, P)
            except DegenerateGradientError:
                skipped += 1
                verdicts.append(PointVerdict(P, None, None, None, None,
                                             None, True))
                continue
        core = (p - 2.0) * dinf + dh
        tol = 1e-3 * (1.0 + abs(dh) + abs(dinf))
        report = verify_residual_limit(u, P, eps_seq, coeffs=coeffs,
                                       quad=quad, search=search)
        limit = report.fitted_limit
        harmonic = abs(limit) <= tol
        core_zero = abs(coeffs.beta * coeffs.C * core) <= tol
        if harmonic:
            consistent = core_zero
        else:
            consistent = (not core_zero) and (limit * core > 0.0)
        verdicts.append(PointVerdict(P, limit, core, tol, harmonic,
                                     consistent, False))
        all_ok = all_ok and harmonic
    return ClassificationReport(p=p, verdicts=tuple(verdicts),
                                harmonic=all_ok, skipped=skipped)
