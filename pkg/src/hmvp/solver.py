"""Lattice Dirichlet solver iterating the mean-value operator (n = 1).

The scheme samples each gauge ball B(P, eps) on one fixed unit-ball node set
mapped by Q -> P o delta_eps(Q), so the group structure is exact and only the
reading of the current iterate is approximate.  Samples landing in a cell
whose eight corners are all updated lattice points read the iterate by
trilinear interpolation; every other sample evaluates the boundary field at
the exact sample coordinates, which makes the eps-belt analytic and as wide
as the field's domain.

The node set is symmetric under Q -> -Q.  Combined with the exactness of
trilinear interpolation on functions linear in each coordinate, that makes
x_1, y_1, and t exact fixed points of the lattice operator, which is what
the solver's sanity criteria lean on.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .fields import ScalarField
from .gaugeball import MVPCoefficients, QuadratureSpec, unit_ball_nodes

try:
    from numba import njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

_CHUNK = 4096


def sample_node_set(levels: tuple = (4, 2, 8), shell: Optional[tuple] = (3, 8)):
    """Fixed unit-ball offsets (m, 3) and averaging weights (sum 1).

    levels is the product-rule (n_phi, n_radial, n_angular).  shell adds
    zero-weight nodes on the unit gauge sphere so the min/max scan sees the
    full ball radius; (n_phi, n_angular) with n_angular even keeps the set
    negation-symmetric.
    """
    W, w = unit_ball_nodes(QuadratureSpec(levels=levels), 1)
    if shell is not None:
        nphi, na = shell
        if na % 2 != 0 or na < 2 or nphi < 1:
            raise ValueError("shell needs an even angular count and n_phi >= 1")
        z, _ = leggauss(nphi)
        phi = z * (math.pi / 2.0)
        rs = np.sqrt(np.cos(phi))
        theta = 2.0 * math.pi * np.arange(na) / na
        RS, TH = np.meshgrid(rs, theta, indexing="ij")
        PHI = np.broadcast_to(phi[:, None], RS.shape)
        ring = np.column_stack([(RS * np.cos(TH)).ravel(),
                                (RS * np.sin(TH)).ravel(),
                                np.sin(PHI).ravel()])
        W = np.vstack([W, ring])
        w = np.concatenate([w, np.zeros(len(ring))])
    return np.ascontiguousarray(W), np.ascontiguousarray(w)


@dataclass(frozen=True)
class GridProblem:
    """Box lattice, ball radius, coefficients, and boundary data.

    The lattice covers box^3 in (x, y, t) with spacing h_xy in x and y and
    h_t in t.  Points strictly inside the box (and outside the closed hole,
    when one is set) are updated; everything else holds the boundary field.
    """

    box: tuple
    h_xy: float
    h_t: float
    eps: float
    coeffs: MVPCoefficients
    boundary: ScalarField
    hole: Optional[tuple] = None
    tolerance: float = 1e-8
    max_iterations: int = 500
    theta: Optional[float] = None
    node_levels: tuple = (4, 2, 8)
    node_shell: Optional[tuple] = (3, 8)

    def __post_init__(self):
        a, b = float(self.box[0]), float(self.box[1])
        if not a < b:
            raise ValueError("box must be an interval (a, b) with a < b")
        object.__setattr__(self, "box", (a, b))
        if self.boundary.n != 1 or self.coeffs.n != 1:
            raise ValueError("the lattice solver is n = 1 only")
        for name in ("h_xy", "h_t", "eps", "tolerance"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        for h, axis in ((self.h_xy, "h_xy"), (self.h_t, "h_t")):
            steps = (b - a) / h
            if abs(steps - round(steps)) > 1e-9:
                raise ValueError(f"{axis} must divide the box length")
        # anisotropy: the ball's t-extent is eps^2
        if self.h_t > self.h_xy ** 2 * (1.0 + 1e-12):
            raise ValueError("need h_t <= h_xy^2")
        if self.eps < 3.0 * self.h_xy * (1.0 - 1e-12):
            raise ValueError("need eps >= 3 h_xy for a resolved ball")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.theta is None:
            object.__setattr__(self, "theta",
                               1.0 if self.coeffs.p >= 2.0 else 0.5)
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("damping theta must lie in (0, 1]")
        if self.hole is not None:
            c, d = float(self.hole[0]), float(self.hole[1])
            if not (a < c < d < b):
                raise ValueError("hole must sit strictly inside the box")
            object.__setattr__(self, "hole", (c, d))
        gamma = self.boundary.gauge_gamma
        if gamma is not None and gamma < 0.0:
            covered = (self.hole is not None
                       and self.hole[0] < 0.0 < self.hole[1])
            if a <= 0.0 <= b and not covered:
                raise ValueError(
                    "singular boundary field: the origin must be excluded "
                    "by a hole or by the box")

    @property
    def nx(self) -> int:
        a, b = self.box
        return int(round((b - a) / self.h_xy)) + 1

    @property
    def nt(self) -> int:
        a, b = self.box
        return int(round((b - a) / self.h_t)) + 1

    @property
    def shape(self) -> tuple:
        return (self.nx, self.nx, self.nt)

    def axis_coords(self):
        """(xs, ts): lattice coordinates along an xy-axis and the t-axis."""
        a, _ = self.box
        xs = a + self.h_xy * np.arange(self.nx)
        ts = a + self.h_t * np.arange(self.nt)
        return xs, ts

    def update_mask(self) -> np.ndarray:
        """Boolean lattice: True where the value is iterated."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[1:-1, 1:-1, 1:-1] = True
        if self.hole is not None:
            c, d = self.hole
            xs, ts = self.axis_coords()
            slack = 1e-9 * self.h_xy
            inx = (xs >= c - slack) & (xs <= d + slack)
            int_ = (ts >= c - slack) & (ts <= d + slack)
            mask &= ~(inx[:, None, None] & inx[None, :, None]
                      & int_[None, None, :])
        return mask

    def boundary_lattice(self) -> np.ndarray:
        """Boundary field sampled on the full lattice."""
        xs, ts = self.axis_coords()
        X, Y, T = np.meshgrid(xs, xs, ts, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel(), T.ravel()])
        out = np.empty(len(pts))
        for s in range(0, len(pts), 1 << 20):
            out[s:s + (1 << 20)] = self.boundary.values(pts[s:s + (1 << 20)])
        return out.reshape(self.shape)


@dataclass(frozen=True)
class GridSolution:
    problem: GridProblem
    values: np.ndarray
    iterations: int
    final_update: float
    history: np.ndarray
    converged: bool

    def __post_init__(self):
        if self.converged and self.final_update > self.problem.tolerance:
            raise ValueError("converged solution must meet the tolerance")

    def to_csv(self, target) -> None:
        """Write rows (i, j, k, x, y, t, value) for the full lattice."""
        own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
        handle = open(target, "w", newline="") if own else target
        try:
            writer = csv.writer(handle)
            writer.writerow(["i", "j", "k", "x", "y", "t", "value"])
            xs, ts = self.problem.axis_coords()
            nx, _, nt = self.problem.shape
            for i in range(nx):
                for j in range(nx):
                    for k in range(nt):
                        writer.writerow([
                            i, j, k,
                            format(xs[i], ".12g"), format(xs[j], ".12g"),
                            format(ts[k], ".12g"),
                            format(self.values[i, j, k], ".12g")])
        finally:
            if own:
                handle.close()


def _encode_boundary(u: ScalarField):
    """(mode, terms, gamma): mode 0 polynomial, 1 gauge power, -1 generic."""
    if u.poly_terms is not None:
        rows = [[c, e[0], e[1], e[2]] for c, e in u.poly_terms]
        terms = np.asarray(rows, dtype=float).reshape(-1, 4)
        return 0, np.ascontiguousarray(terms), 0.0
    if u.gauge_gamma is not None:
        return 1, np.zeros((0, 4)), float(u.gauge_gamma)
    return -1, np.zeros((0, 4)), 0.0


class _Context:
    """Per-solve precomputation shared by every sweep."""

    def __init__(self, problem: GridProblem, engine: str):
        self.upd = problem.update_mask()
        self.nodes, self.weights = sample_node_set(problem.node_levels,
                                                   problem.node_shell)
        self.gmode, self.gterms, self.ggamma = _encode_boundary(
            problem.boundary)
        if engine == "auto":
            engine = "numba" if _HAVE_NUMBA and self.gmode >= 0 else "numpy"
        if engine == "numba":
            if not _HAVE_NUMBA:
                raise ValueError("numba engine requested but numba is missing")
            if self.gmode < 0:
                raise ValueError(
                    "numba engine needs a polynomial or gauge-power boundary "
                    "field; use engine='numpy' for generic fields")
        elif engine != "numpy":
            raise ValueError("engine must be 'auto', 'numba', or 'numpy'")
        self.engine = engine


if _HAVE_NUMBA:

    @njit(cache=True)
    def _kernel(vals, upd, a, h, ht, eps, nodes, weights,
                alpha, beta, theta, gmode, gterms, ggamma, out):
        nx, ny, nt = vals.shape
        m = nodes.shape[0]
        for i in range(nx):
            x = a + i * h
            for j in range(ny):
                y = a + j * h
                for k in range(nt):
                    if not upd[i, j, k]:
                        out[i, j, k] = vals[i, j, k]
                        continue
                    t = a + k * ht
                    mn = 1e300
                    mx = -1e300
                    acc = 0.0
                    for s in range(m):
                        qx = nodes[s, 0] * eps
                        qy = nodes[s, 1] * eps
                        qt = nodes[s, 2] * eps * eps
                        sx = x + qx
                        sy = y + qy
                        st = t + qt + 2.0 * (qx * y - x * qy)
                        have = False
                        v = 0.0
                        fx = (sx - a) / h
                        fy = (sy - a) / h
                        ft = (st - a) / ht
                        i0 = int(math.floor(fx))
                        j0 = int(math.floor(fy))
                        k0 = int(math.floor(ft))
                        if (0 <= i0 and i0 + 1 < nx and 0 <= j0
                                and j0 + 1 < ny and 0 <= k0 and k0 + 1 < nt):
                            if (upd[i0, j0, k0] and upd[i0 + 1, j0, k0]
                                    and upd[i0, j0 + 1, k0]
                                    and upd[i0 + 1, j0 + 1, k0]
                                    and upd[i0, j0, k0 + 1]
                                    and upd[i0 + 1, j0, k0 + 1]
                                    and upd[i0, j0 + 1, k0 + 1]
                                    and upd[i0 + 1, j0 + 1, k0 + 1]):
                                wx = fx - i0
                                wy = fy - j0
                                wt = ft - k0
                                c00 = (vals[i0, j0, k0] * (1.0 - wx)
                                       + vals[i0 + 1, j0, k0] * wx)
                                c10 = (vals[i0, j0 + 1, k0] * (1.0 - wx)
                                       + vals[i0 + 1, j0 + 1, k0] * wx)
                                c01 = (vals[i0, j0, k0 + 1] * (1.0 - wx)
                                       + vals[i0 + 1, j0, k0 + 1] * wx)
                                c11 = (vals[i0, j0 + 1, k0 + 1] * (1.0 - wx)
                                       + vals[i0 + 1, j0 + 1, k0 + 1] * wx)
                                c0 = c00 * (1.0 - wy) + c10 * wy
                                c1 = c01 * (1.0 - wy) + c11 * wy
                                v = c0 * (1.0 - wt) + c1 * wt
                                have = True
                        if not have:
                            if gmode == 0:
                                v = 0.0
                                for r in range(gterms.shape[0]):
                                    term = gterms[r, 0]
                                    for _ in range(int(gterms[r, 1])):
                                        term *= sx
                                    for _ in range(int(gterms[r, 2])):
                                        term *= sy
                                    for _ in range(int(gterms[r, 3])):
                                        term *= st
                                    v += term
                            else:
                                rho2 = sx * sx + sy * sy
                                v = (rho2 * rho2 + st * st) ** (ggamma / 4.0)
                        acc += weights[s] * v
                        if v < mn:
                            mn = v
                        if v > mx:
                            mx = v
                    new = 0.5 * alpha * (mn + mx) + beta * acc
                    out[i, j, k] = (1.0 - theta) * vals[i, j, k] + theta * new


def _sweep_numpy(vals, out, problem: GridProblem, ctx: _Context):
    a, _ = problem.box
    h, ht, eps = problem.h_xy, problem.h_t, problem.eps
    alpha, beta = problem.coeffs.alpha, problem.coeffs.beta
    theta = problem.theta
    nx, ny, nt = vals.shape
    np.copyto(out, vals)
    ii, jj, kk = np.nonzero(ctx.upd)
    qx = ctx.nodes[:, 0] * eps
    qy = ctx.nodes[:, 1] * eps
    qt = ctx.nodes[:, 2] * eps * eps
    for s in range(0, len(ii), _CHUNK):
        isl = ii[s:s + _CHUNK]
        jsl = jj[s:s + _CHUNK]
        ksl = kk[s:s + _CHUNK]
        x = a + isl * h
        y = a + jsl * h
        t = a + ksl * ht
        sx = x[:, None] + qx[None, :]
        sy = y[:, None] + qy[None, :]
        st = (t[:, None] + qt[None, :]
              + 2.0 * (qx[None, :] * y[:, None] - x[:, None] * qy[None, :]))
        fx = (sx - a) / h
        fy = (sy - a) / h
        ft = (st - a) / ht
        i0 = np.floor(fx).astype(np.int64)
        j0 = np.floor(fy).astype(np.int64)
        k0 = np.floor(ft).astype(np.int64)
        inb = ((i0 >= 0) & (i0 + 1 < nx) & (j0 >= 0) & (j0 + 1 < ny)
               & (k0 >= 0) & (k0 + 1 < nt))
        i0c = np.clip(i0, 0, nx - 2)
        j0c = np.clip(j0, 0, ny - 2)
        k0c = np.clip(k0, 0, nt - 2)
        corners = ctx.upd[i0c, j0c, k0c]
        for di, dj, dk in ((1, 0, 0), (0, 1, 0), (1, 1, 0), (0, 0, 1),
                           (1, 0, 1), (0, 1, 1), (1, 1, 1)):
            corners &= ctx.upd[i0c + di, j0c + dj, k0c + dk]
        use = inb & corners
        wx = fx - i0c
        wy = fy - j0c
        wt = ft - k0c
        c00 = vals[i0c, j0c, k0c] * (1 - wx) + vals[i0c + 1, j0c, k0c] * wx
        c10 = (vals[i0c, j0c + 1, k0c] * (1 - wx)
               + vals[i0c + 1, j0c + 1, k0c] * wx)
        c01 = (vals[i0c, j0c, k0c + 1] * (1 - wx)
               + vals[i0c + 1, j0c, k0c + 1] * wx)
        c11 = (vals[i0c, j0c + 1, k0c + 1] * (1 - wx)
               + vals[i0c + 1, j0c + 1, k0c + 1] * wx)
        c0 = c00 * (1 - wy) + c10 * wy
        c1 = c01 * (1 - wy) + c11 * wy
        v = np.where(use, c0 * (1 - wt) + c1 * wt, 0.0)
        miss = ~use
        if miss.any():
            pts = np.column_stack([sx[miss], sy[miss], st[miss]])
            v[miss] = problem.boundary.values(pts)
        new = (0.5 * alpha * (v.min(axis=1) + v.max(axis=1))
               + beta * (v @ ctx.weights))
        out[isl, jsl, ksl] = ((1.0 - theta) * vals[isl, jsl, ksl]
                              + theta * new)


def _sweep(vals, out, problem: GridProblem, ctx: _Context):
    if ctx.engine == "numba":
        a, _ = problem.box
        _kernel(vals, ctx.upd, a, problem.h_xy, problem.h_t, problem.eps,
                ctx.nodes, ctx.weights, problem.coeffs.alpha,
                problem.coeffs.beta, problem.theta, ctx.gmode, ctx.gterms,
                ctx.ggamma, out)
    else:
        _sweep_numpy(vals, out, problem, ctx)


def dpp_apply(values: np.ndarray, problem: GridProblem,
              engine: str = "auto") -> np.ndarray:
    """One damped sweep of the mean-value operator over the lattice.

    new(P) = (alpha/2)(min + max) + beta * avg of the current iterate over
    the sampled ball B(P, eps); out = (1 - theta) old + theta new at updated
    points, frozen points pass through.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != problem.shape:
        raise ValueError("lattice shape mismatch")
    ctx = _Context(problem, engine)
    out = np.empty_like(values)
    _sweep(np.ascontiguousarray(values), out, problem, ctx)
    return out


def dirichlet_solve(problem: GridProblem, engine: str = "auto"
                    ) -> GridSolution:
    """Picard-iterate dpp_apply from the boundary field extended inward.

    Stops when the sup-norm update drops below the tolerance or after
    max_iterations sweeps; non-convergence is reported in the solution, not
    raised.
    """
    ctx = _Context(problem, engine)
    vals = np.ascontiguousarray(problem.boundary_lattice())
    out = np.empty_like(vals)
    history = []
    converged = False
    for _ in range(problem.max_iterations):
        _sweep(vals, out, problem, ctx)
        update = float(np.max(np.abs(out - vals)))
        history.append(update)
        vals, out = out, vals
        if update < problem.tolerance:
            converged = True
            break
    if not np.all(np.isfinite(vals[ctx.upd])):
        raise ArithmeticError("non-finite lattice values after iteration; "
                              "boundary field misconfigured for this domain")
    return GridSolution(problem=problem, values=vals,
                        iterations=len(history),
                        final_update=history[-1], history=np.asarray(history),
                        converged=converged)


def error_report(solution: GridSolution, reference: ScalarField):
    """(sup, mean) absolute error against a reference field, updated points only."""
    problem = solution.problem
    mask = problem.update_mask()
    xs, ts = problem.axis_coords()
    ii, jj, kk = np.nonzero(mask)
    pts = np.column_stack([xs[ii], xs[jj], ts[kk]])
    diff = np.empty(len(pts))
    for s in range(0, len(pts), 1 << 20):
        sl = slice(s, s + (1 << 20))
        diff[sl] = (solution.values[ii[sl], jj[sl], kk[sl]]
                    - reference.values(pts[sl]))
    err = np.abs(diff)
    return float(err.max()), float(err.mean())
