"""Gauge-ball geometry: volume, quadrature averages, extrema, and the
mean-value coefficients.

The unit ball {((|x|^2+|y|^2)^2 + t^2)^(1/4) < 1} is sliced along t. With the
substitution t = sin(phi) each slice is a Euclidean ball of radius
sqrt(cos phi) in R^{2n} and the slice integrand of a polynomial field is a
trigonometric polynomial in phi, so Gauss-Legendre nodes in phi converge
geometrically (plain nodes in t would see the (1-t^2)^(1/4) endpoint kink and
stall at algebraic order). Balls B(P, eps) are reached exactly through the
group structure: average over B(P, eps) = weighted sum of u(P o delta_eps Q_j)
with one fixed unit-ball node set {Q_j}, because left translation preserves
Lebesgue measure and the dilation Jacobian cancels in the average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.stats import qmc

from . import hgroup
from .hgroup import Point

CONSTANT_SOURCES = ("calibrated", "integral-form", "gamma-form")


@dataclass(frozen=True)
class BallSpec:
    """A gauge ball: center point and radius eps > 0."""

    center: Point
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature request: product rule levels or low-discrepancy samples.

    method "product": levels = (t nodes, radial nodes, angular nodes);
    method "lds": scrambled Sobol points in the bounding box, indicator
    filtered. The string forms are "product:32,32,64" and
    "lds:100000:seed=7".
    """

    method: str = "product"
    levels: tuple = (32, 32, 64)
    samples: int = 100000
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("product", "lds"):
            raise ValueError("method must be 'product' or 'lds'")
        levels = tuple(int(v) for v in self.levels)
        if self.method == "product" and any(v < 2 for v in levels):
            raise ValueError("product-rule node counts must be >= 2")
        if self.method == "lds" and self.samples < 2:
            raise ValueError("sample count must be >= 2")
        object.__setattr__(self, "levels", levels)

    @staticmethod
    def parse(text: str) -> "QuadratureSpec":
        parts = text.strip().split(":")
        if parts[0] == "product" and len(parts) == 2:
            counts = tuple(int(v) for v in parts[1].split(","))
            if len(counts) != 3:
                raise ValueError("product spec needs three counts, got %r" % text)
            return QuadratureSpec("product", counts)
        if parts[0] == "lds" and len(parts) in (2, 3):
            samples = int(parts[1])
            seed = 0
            if len(parts) == 3:
                key, _, val = parts[2].partition("=")
                if key != "seed":
                    raise ValueError("unknown lds option %r" % parts[2])
                seed = int(val)
            return QuadratureSpec("lds", samples=samples, seed=seed)
        raise ValueError("cannot parse quadrature spec %r" % text)

    def halved(self) -> "QuadratureSpec":
        if self.method == "product":
            return QuadratureSpec("product",
                                  tuple(max(2, v // 2) for v in self.levels))
        return QuadratureSpec("lds", samples=max(2, self.samples // 2),
                              seed=self.seed + 1)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    nodes: int


@dataclass(frozen=True)
class MVPCoefficients:
    """Mean-value weights: alpha on (min+max)/2, beta on the ball average.

    beta = 1/(2(p-2)C + 1) and alpha = 1 - beta, so alpha + beta = 1 holds
    exactly as computed and alpha/(2 beta C) = p - 2.
    """

    n: int
    p: float
    C: float
    alpha: float
    beta: float
    constant_source: str = "calibrated"

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if abs(self.alpha + self.beta - 1.0) > 1e-14:
            raise ValueError("alpha + beta must equal 1")


@dataclass(frozen=True)
class ExtremumResult:
    """Located extrema of a field over a closed gauge ball.

    Scaled coordinates refer to the ball centered at the origin (the center
    translated away): (x/eps, y/eps) and |t|/eps^3, the combinations whose
    limits the asymptotic theory prescribes.
    """

    argmax: Point
    argmin: Point
    max_value: float
    min_value: float
    max_scaled_xy: np.ndarray
    min_scaled_xy: np.ndarray
    max_t_over_eps3: float
    min_t_over_eps3: float
    max_on_boundary: bool
    min_on_boundary: bool
    evaluations: int


@dataclass(frozen=True)
class SearchConfig:
    """Multi-start pattern-search budget for ball extrema."""

    boundary_seeds: int = 64
    interior_samples: int = 256
    refine_top: int = 8
    step_tol: float = 1e-9
    max_steps: int = 400
    seed: int = 0


# ---------------------------------------------------------------------------
# volume


def _slice_integral(k: int) -> float:
    # I_k = integral of (1 - s^2)^(k/2) over [0, 1], by adaptive quadrature
    val, _ = integrate.quad(lambda s: (1.0 - s * s) ** (k / 2.0), 0.0, 1.0)
    return val


def ball_volume(n: int, eps: float) -> float:
    """Closed-form Lebesgue volume of the gauge ball B(0, eps) in R^{2n+1}.

    |B| = eps^(2n+2) * (omega(2n)/n) * I_n with omega(2n) the surface measure
    of the unit sphere in R^{2n} and I_n the half slice integral; for n=1
    this is eps^4 * pi^2 / 2.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    omega = 2.0 * math.pi ** n / math.gamma(n)
    # I_n in closed form: sqrt(pi) Gamma(n/2 + 1) / (2 Gamma(n/2 + 3/2))
    i_n = math.sqrt(math.pi) * math.gamma(n / 2.0 + 1.0) \
        / (2.0 * math.gamma(n / 2.0 + 1.5))
    return eps ** (2 * n + 2) * (omega / n) * i_n


def ball_volume_estimate(n: int, eps: float, samples: int = 10 ** 7,
                         seed: int = 0) -> float:
    """Low-discrepancy indicator integration of the same volume.

    Scrambled Sobol points fill the bounding box [-eps, eps]^{2n} x
    [-eps^2, eps^2]; the indicator mean times the box volume estimates |B|.
    """
    d = 2 * n + 1
    sob = qmc.Sobol(d=d, scramble=True, seed=seed)
    box_vol = (2.0 * eps) ** (2 * n) * 2.0 * eps * eps
    total = 0
    remaining = samples
    # draw in chunks to bound memory at large sample counts
    chunk = 1 << 21
    while remaining > 0:
        m = min(chunk, remaining)
        U = sob.random(m)
        W = np.empty((m, d))
        W[:, :2 * n] = (2.0 * U[:, :2 * n] - 1.0) * eps
        W[:, -1] = (2.0 * U[:, -1] - 1.0) * eps * eps
        total += int(np.count_nonzero(hgroup.gauge_norm_batch(W) <= eps))
        remaining -= m
    return box_vol * total / samples


# ---------------------------------------------------------------------------
# unit-ball node sets


def unit_ball_nodes(quad: QuadratureSpec, n: int = 1):
    """Quadrature nodes and weights on the unit gauge ball.

    Returns (W, w): coordinate rows (m, 2n+1) and weights. Product-rule
    weights sum to 1 (average weights); lds weights sum to the sampled
    volume fraction over the exact ball volume, per the indicator estimator.
    """
    if quad.method == "product":
        if n == 1:
            return _product_nodes_n1(*quad.levels)
        if n == 2:
            return _product_nodes_n2(*quad.levels)
        raise ValueError("product rule is implemented for n <= 2")
    return _lds_nodes(quad, n)


def _phi_rule(nt: int):
    # Gauss-Legendre in phi on [-pi/2, pi/2] for integrals against cos(phi)
    z, gw = leggauss(nt)
    phi = z * (math.pi / 2.0)
    w = gw * (math.pi / 2.0) * np.cos(phi)
    return phi, w


def _radial_rule(nr: int):
    # Gauss-Legendre on [0, 1]
    z, gw = leggauss(nr)
    return (z + 1.0) / 2.0, gw / 2.0


def _product_nodes_n1(nt: int, nr: int, na: int):
    phi, wphi = _phi_rule(nt)
    q, wq = _radial_rule(nr)
    theta = 2.0 * math.pi * np.arange(na) / na
    wtheta = 2.0 * math.pi / na

    rs = np.sqrt(np.cos(phi))                      # slice disk radius
    # meshgrid over (phi, q, theta), flattened
    PHI, Qr, TH = np.meshgrid(phi, q, theta, indexing="ij")
    RS = np.sqrt(np.cos(PHI))
    X = RS * Qr * np.cos(TH)
    Y = RS * Qr * np.sin(TH)
    T = np.sin(PHI)
    # weight: (slice thickness) * (disk Jacobian rs^2 * q) * dtheta
    W3 = (wphi[:, None, None] * (rs ** 2)[:, None, None]
          * (wq * q)[None, :, None] * wtheta)
    Wt = np.broadcast_to(W3, PHI.shape)
    nodes = np.column_stack([X.ravel(), Y.ravel(), T.ravel()])
    w = Wt.ravel().copy()
    w /= w.sum()
    return nodes, w


def _product_nodes_n2(nt: int, nr: int, na: int):
    # slice is a 4-ball; its sphere S^3 in double-polar coordinates
    # (sqrt(1-v) e^{i th1}, sqrt(v) e^{i th2}) has measure dv dth1 dth2 / 2
    nv = max(2, na // 4)
    phi, wphi = _phi_rule(nt)
    q, wq = _radial_rule(nr)
    v, wv = _radial_rule(nv)
    th1 = 2.0 * math.pi * np.arange(na) / na
    th2 = 2.0 * math.pi * np.arange(na) / na

    rs = np.sqrt(np.cos(phi))
    PHI, Qr, V, T1, T2 = np.meshgrid(phi, q, v, th1, th2, indexing="ij")
    RS = np.sqrt(np.cos(PHI))
    R = RS * Qr
    c1 = np.sqrt(1.0 - V)
    c2 = np.sqrt(V)
    X1 = R * c1 * np.cos(T1)
    Y1 = R * c1 * np.sin(T1)
    X2 = R * c2 * np.cos(T2)
    Y2 = R * c2 * np.sin(T2)
    T = np.sin(PHI)
    wth = (2.0 * math.pi / na) ** 2
    W5 = (wphi[:, None, None] * (rs ** 4)[:, None, None]
          * (wq * q ** 3)[None, :, None] * wv[None, None, :] * 0.5 * wth)
    Wt = np.broadcast_to(W5[..., None, None], PHI.shape)
    nodes = np.column_stack([X1.ravel(), X2.ravel(), Y1.ravel(),
                             Y2.ravel(), T.ravel()])
    w = Wt.ravel().copy()
    w /= w.sum()
    return nodes, w


def _lds_nodes(quad: QuadratureSpec, n: int):
    d = 2 * n + 1
    sob = qmc.Sobol(d=d, scramble=True, seed=quad.seed)
    U = sob.random(quad.samples)
    W = np.empty((quad.samples, d))
    W[:, :2 * n] = 2.0 * U[:, :2 * n] - 1.0
    W[:, -1] = 2.0 * U[:, -1] - 1.0
    inside = hgroup.gauge_norm_batch(W) <= 1.0
    nodes = W[inside]
    box_vol = 2.0 ** (2 * n) * 2.0
    # integral weight per point, normalized by the exact ball volume
    w = np.full(len(nodes), box_vol / (quad.samples * ball_volume(n, 1.0)))
    return nodes, w


def map_into_ball(center: Point, eps: float, W: np.ndarray) -> np.ndarray:
    """Send unit-ball coordinate rows Q to P o delta_eps(Q)."""
    return hgroup.group_mul_batch(center, hgroup.dilate_batch(eps, W))


# ---------------------------------------------------------------------------
# averages


def ball_average(u, ball: BallSpec, quad: Optional[QuadratureSpec] = None
                 ) -> QuadratureResult:
    """Average of u over B(center, eps) with an error estimate.

    The estimate is the difference against a half-resolution rule (product)
    or the sample standard error (lds), floored at roundoff scale.
    """
    if quad is None:
        quad = QuadratureSpec() if ball.center.n == 1 \
            else QuadratureSpec(levels=(16, 16, 16))
    n = ball.center.n

    def run(q):
        nodes, w = unit_ball_nodes(q, n)
        vals = u.values(map_into_ball(ball.center, ball.radius, nodes))
        if not np.all(np.isfinite(vals)):
            raise ArithmeticError("field returned non-finite values on the ball")
        return float(w @ vals), len(w), vals, w

    value, m, vals, w = run(quad)
    if quad.method == "product":
        half, _, _, _ = run(quad.halved())
        err = abs(value - half)
    else:
        # weights are uniform; spread of the weighted terms gives the SE
        contrib = vals * (w * m)
        err = float(np.std(contrib) / math.sqrt(m))
    err = max(err, 1e-15 * (1.0 + abs(value)))
    return QuadratureResult(value=value, error=err, nodes=m)


# ---------------------------------------------------------------------------
# constants


def c_constant(n: int, source: str = "calibrated",
               quad: Optional[QuadratureSpec] = None) -> float:
    """The ball-average curvature constant C(n), from one of three sources.

    "calibrated" measures the defining property on the field |x|^2 + |y|^2,
    whose expansion terminates: C = avg_{B(0,1)}(|x|^2+|y|^2) / (4n). The
    other two evaluate printed closed forms that disagree with the defining
    property (by factors 2 and 8/3 at n=1) and are exposed for comparison
    only: "integral-form" is I_{n+1}/(2(n+1) I_n) with
    I_k = int_0^1 (1-s^2)^(k/2) ds, "gamma-form" a Gamma-function ratio.
    """
    if source == "calibrated":
        from .fields import make_square_norm
        center = Point(np.zeros(n), np.zeros(n), 0.0)
        avg = ball_average(make_square_norm(n), BallSpec(center, 1.0), quad)
        return avg.value / (4.0 * n)
    if source == "integral-form":
        return _slice_integral(n + 1) / (2.0 * (n + 1) * _slice_integral(n))
    if source == "gamma-form":
        return math.gamma((n + 3) / 2.0) ** 2 \
            / ((2 * n + 1) * math.gamma(n / 2.0 + 1.0) * math.gamma(n / 2.0 + 2.0))
    raise ValueError("unknown constant source %r (choose from %s)"
                     % (source, ", ".join(CONSTANT_SOURCES)))


def alpha_beta(n: int, p: float, C: float,
               constant_source: str = "calibrated") -> MVPCoefficients:
    """Mean-value coefficients alpha, beta for given p and constant C.

    beta = 1/(2(p-2)C + 1), alpha = 1 - beta.
    """
    p = float(p)
    C = float(C)
    if not (1.0 < p < math.inf):
        raise ValueError("p must lie in (1, inf)")
    if not (0.0 < C < 0.5):
        raise ValueError("C must lie in (0, 1/2)")
    beta = 1.0 / (2.0 * (p - 2.0) * C + 1.0)
    return MVPCoefficients(n=n, p=p, C=C, alpha=1.0 - beta, beta=beta,
                           constant_source=constant_source)


def coefficients(n: int, p: float, source: str = "calibrated",
                 quad: Optional[QuadratureSpec] = None) -> MVPCoefficients:
    """Convenience: compute C from the chosen source, then alpha and beta."""
    return alpha_beta(n, p, c_constant(n, source, quad), constant_source=source)


# ---------------------------------------------------------------------------
# extrema


def _sphere_chart(theta, phi):
    # unit gauge sphere for n=1; smooth across t=0, poles at phi = +-pi/2
    rs = np.sqrt(np.cos(phi))
    return np.stack([rs * np.cos(theta), rs * np.sin(theta), np.sin(phi)],
                    axis=-1)


def _compass_search(f, x0, steps0, bounds, step_tol, max_steps):
    """Coordinate pattern search maximizing f; returns (x, value, evals)."""
    x = np.array(x0, dtype=float)
    steps = np.array(steps0, dtype=float)
    best = f(x)
    evals = 1
    for _ in range(max_steps):
        if np.all(steps < step_tol):
            break
        moved = False
        for j in range(len(x)):
            for s in (+1.0, -1.0):
                trial = x.copy()
                trial[j] += s * steps[j]
                lo, hi = bounds[j]
                if lo is not None:
                    trial[j] = min(max(trial[j], lo), hi)
                val = f(trial)
                evals += 1
                if val > best:
                    best = val
                    x = trial
                    moved = True
        if not moved:
            steps /= 2.0
    return x, best, evals


def _search_maximum(u, center: Point, eps: float, cfg: SearchConfig):
    """Maximum of u over the closed ball B(center, eps), centered chart."""
    n = center.n

    def val_batch(Q):
        return u.values(map_into_ball(center, eps, Q))

    evals = 0
    # boundary seeds on the sphere chart (n=1) or a Sobol sphere cover
    if n == 1:
        ntheta, nphi = 16, max(1, cfg.boundary_seeds // 16)
        theta = 2.0 * math.pi * np.arange(ntheta) / ntheta
        phi = -math.pi / 2.0 + math.pi * (np.arange(nphi) + 0.5) / nphi
        TH, PH = np.meshgrid(theta, phi, indexing="ij")
        pairs = np.column_stack([TH.ravel(), PH.ravel()])
        # the poles are chart-degenerate; seed them explicitly
        pairs = np.vstack([pairs, [0.0, math.pi / 2.0], [0.0, -math.pi / 2.0]])
        Q = _sphere_chart(pairs[:, 0], pairs[:, 1])
    else:
        sob = qmc.Sobol(d=2 * n, scramble=True, seed=cfg.seed)
        U = sob.random(max(8, cfg.boundary_seeds))
        # angles (th1, .., direction chart) then slice position
        ang = 2.0 * math.pi * U[:, :n]
        v = U[:, n:2 * n - 1] if n > 1 else None
        phi = math.pi * (U[:, -1] - 0.5)
        rs = np.sqrt(np.cos(phi))
        Q = np.zeros((len(U), 2 * n + 1))
        if n == 2:
            c1 = np.sqrt(1.0 - v[:, 0])
            c2 = np.sqrt(v[:, 0])
            Q[:, 0] = rs * c1 * np.cos(ang[:, 0])
            Q[:, 2] = rs * c1 * np.sin(ang[:, 0])
            Q[:, 1] = rs * c2 * np.cos(ang[:, 1])
            Q[:, 3] = rs * c2 * np.sin(ang[:, 1])
        Q[:, -1] = np.sin(phi)
        pairs = None
    bvals = val_batch(Q)
    evals += len(Q)

    # interior low-discrepancy sample plus the exact center
    sob = qmc.Sobol(d=2 * n + 1, scramble=True, seed=cfg.seed + 1)
    U = sob.random(cfg.interior_samples)
    Wi = np.empty_like(U)
    Wi[:, :2 * n] = 2.0 * U[:, :2 * n] - 1.0
    Wi[:, -1] = 2.0 * U[:, -1] - 1.0
    Wi = Wi[hgroup.gauge_norm_batch(Wi) < 1.0]
    Wi = np.vstack([Wi, np.zeros(2 * n + 1)])
    ivals = val_batch(Wi)
    evals += len(Wi)

    best_q = None
    best_val = -math.inf
    on_boundary = False

    if n == 1 and pairs is not None:
        order = np.argsort(bvals)[::-1][:cfg.refine_top]
        for idx in order:
            x0 = pairs[idx]

            def f(par):
                nonlocal evals
                node = _sphere_chart(par[0], par[1])[None, :]
                evals += 1
                return float(val_batch(node)[0])

            xr, vr, used = _compass_search(
                f, x0, steps0=(math.pi / 16.0, math.pi / 16.0),
                bounds=[(None, None), (-math.pi / 2.0, math.pi / 2.0)],
                step_tol=cfg.step_tol, max_steps=cfg.max_steps)
            if vr > best_val:
                best_val = vr
                best_q = _sphere_chart(xr[0], xr[1])
                on_boundary = True
    else:
        idx = int(np.argmax(bvals))
        best_val = float(bvals[idx])
        best_q = Q[idx]
        on_boundary = True

    i_best = int(np.argmax(ivals))
    if float(ivals[i_best]) > best_val:
        best_val = float(ivals[i_best])
        best_q = Wi[i_best]
        on_boundary = bool(abs(hgroup.gauge_norm_batch(best_q[None, :])[0] - 1.0)
                           <= 1e-9)

    return best_q, best_val, on_boundary, evals


def ball_extrema(u, ball: BallSpec, search: Optional[SearchConfig] = None
                 ) -> ExtremumResult:
    """Global max and min of u over the closed ball, by multi-start search.

    Boundary candidates are seeded on the gauge sphere chart
    (sqrt(cos phi) cos theta, sqrt(cos phi) sin theta, sin phi), refined by
    compass pattern search in (theta, phi); interior candidates come from a
    low-discrepancy sample (and the exact center). The search is
    deterministic for a fixed config.
    """
    cfg = search or SearchConfig()
    eps = ball.radius
    n = ball.center.n

    # maximize u and -u through the same machinery
    q_max, v_max, max_bdry, e1 = _search_maximum(u, ball.center, eps, cfg)

    class _Neg:
        def values(self, W):
            return -u.values(W)

    q_min, v_min_neg, min_bdry, e2 = _search_maximum(_Neg(), ball.center, eps, cfg)
    v_min = -v_min_neg

    def to_point(q):
        row = map_into_ball(ball.center, eps, q[None, :])[0]
        return Point.from_array(row)

    scaled = lambda q: (q[: 2 * n].copy(), abs(q[2 * n]) / eps)
    max_xy, max_t3 = scaled(q_max)
    min_xy, min_t3 = scaled(q_min)
    return ExtremumResult(
        argmax=to_point(q_max), argmin=to_point(q_min),
        max_value=v_max, min_value=v_min,
        max_scaled_xy=max_xy, min_scaled_xy=min_xy,
        max_t_over_eps3=max_t3, min_t_over_eps3=min_t3,
        max_on_boundary=max_bdry, min_on_boundary=min_bdry,
        evaluations=e1 + e2)
