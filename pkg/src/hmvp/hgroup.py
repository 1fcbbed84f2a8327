"""Heisenberg group algebra and horizontal differential calculus.

The group H^n lives on R^{2n+1} with coordinates (x, y, t), x and y in R^n.
The product twists only the t coordinate, dilations scale t quadratically,
and the horizontal frame is

    X_i = d/dx_i + 2 y_i d/dt,      Y_i = d/dy_i - 2 x_i d/dt.

Everything here is exact pointwise algebra plus finite-difference fallbacks;
no state, no allocation beyond small arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = np.finfo(float).eps
# Central-difference steps: first derivatives balance h^2 truncation against
# eps/h roundoff at h ~ eps^(1/3); value-based second differences at eps^(1/4).
FD_STEP_GRAD = EPS ** (1.0 / 3.0)
FD_STEP_HESS = EPS ** 0.25


@dataclass(frozen=True)
class Point:
    """A point of H^n: horizontal coordinates (x, y) and vertical coordinate t.

    t scales as length squared under the group dilations.
    """

    x: np.ndarray
    y: np.ndarray
    t: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.ndim != 1 or y.ndim != 1 or x.size != y.size or x.size < 1:
            raise ValueError("x and y must be 1-d arrays of equal length n >= 1")
        t = float(self.t)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.isfinite(t)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.x.size

    def as_array(self) -> np.ndarray:
        """Flat coordinate row (x_1..x_n, y_1..y_n, t)."""
        return np.concatenate([self.x, self.y, [self.t]])

    @staticmethod
    def from_array(w) -> "Point":
        w = np.asarray(w, dtype=float)
        n = (w.size - 1) // 2
        if w.size != 2 * n + 1 or n < 1:
            raise ValueError("coordinate array must have odd length 2n+1 >= 3")
        return Point(w[:n], w[n:2 * n], w[2 * n])


def point(*coords) -> Point:
    """Convenience constructor from 2n+1 scalars, e.g. point(1, 0, 0) for n=1."""
    return Point.from_array(np.array(coords, dtype=float))


ORIGIN = point(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class HorizontalVector:
    """Vector in the horizontal frame, components ordered X_1..X_n, Y_1..Y_n."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        if c.ndim != 1 or c.size % 2 != 0 or c.size < 2:
            raise ValueError("coefficients must have even length 2n")
        object.__setattr__(self, "coefficients", c)

    @property
    def n(self) -> int:
        return self.coefficients.size // 2

    def norm(self) -> float:
        # the frame is orthonormal, so the norm is Euclidean
        return float(np.linalg.norm(self.coefficients))

    def inner(self, other: "HorizontalVector") -> float:
        return float(self.coefficients @ other.coefficients)


@dataclass(frozen=True)
class SymHorizontalMatrix:
    """Symmetrized second-order horizontal derivative matrix, 2n x 2n."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2 != 0:
            raise ValueError("entries must be a square 2n x 2n matrix")
        object.__setattr__(self, "entries", (a + a.T) / 2.0)

    @property
    def n(self) -> int:
        return self.entries.shape[0] // 2

    def trace(self) -> float:
        return float(np.trace(self.entries))

    def quad_form(self, v) -> float:
        """<M v, v> for a horizontal vector or plain 2n array."""
        c = v.coefficients if isinstance(v, HorizontalVector) else np.asarray(v, float)
        return float(c @ self.entries @ c)


# ---------------------------------------------------------------------------
# group operations


def group_mul(P: Point, Q: Point) -> Point:
    """Group product P o Q; the t coordinate picks up 2(x_Q.y_P - x_P.y_Q)."""
    if P.n != Q.n:
        raise ValueError("dimension mismatch")
    t = P.t + Q.t + 2.0 * (float(Q.x @ P.y) - float(P.x @ Q.y))
    return Point(P.x + Q.x, P.y + Q.y, t)


def group_inv(P: Point) -> Point:
    """Group inverse, the coordinate-wise negation."""
    return Point(-P.x, -P.y, -P.t)


def dilate(r: float, P: Point) -> Point:
    """Anisotropic dilation (x, y, t) -> (r x, r y, r^2 t); requires r > 0."""
    r = float(r)
    if r <= 0.0:
        raise ValueError("dilation factor must be positive")
    return Point(r * P.x, r * P.y, r * r * P.t)


def gauge_norm(P: Point) -> float:
    """Homogeneous gauge ((|x|^2+|y|^2)^2 + t^2)^(1/4)."""
    rho2 = float(P.x @ P.x + P.y @ P.y)
    return (rho2 * rho2 + P.t * P.t) ** 0.25


def gauge_distance(P: Point, Q: Point) -> float:
    """Left-invariant gauge distance ||P^-1 o Q||."""
    return gauge_norm(group_mul(group_inv(P), Q))


# ---------------------------------------------------------------------------
# batch variants on coordinate rows (m, 2n+1); used by quadrature and fields


def group_mul_batch(P: Point, W: np.ndarray) -> np.ndarray:
    """Left-multiply each coordinate row of W by P."""
    W = np.asarray(W, dtype=float)
    n = P.n
    out = np.empty_like(W)
    out[:, :n] = P.x + W[:, :n]
    out[:, n:2 * n] = P.y + W[:, n:2 * n]
    out[:, 2 * n] = P.t + W[:, 2 * n] \
        + 2.0 * (W[:, :n] @ P.y - W[:, n:2 * n] @ P.x)
    return out


def dilate_batch(r: float, W: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    out = W * r
    out[:, -1] = W[:, -1] * (r * r)
    return out


def gauge_norm_batch(W: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    n = (W.shape[1] - 1) // 2
    rho2 = np.sum(W[:, :2 * n] ** 2, axis=1)
    return (rho2 ** 2 + W[:, -1] ** 2) ** 0.25


# ---------------------------------------------------------------------------
# finite differences on coordinate functions


def fd_gradient(value, W: np.ndarray) -> np.ndarray:
    """Central-difference Euclidean gradient of a batch value callable.

    Parameters
    ----------
    value : callable
        Maps an (m, d) coordinate array to (m,) values.
    W : ndarray, shape (m, d)

    Returns
    -------
    ndarray, shape (m, d)
    """
    W = np.asarray(W, dtype=float)
    m, d = W.shape
    out = np.empty((m, d))
    for j in range(d):
        h = FD_STEP_GRAD * np.maximum(1.0, np.abs(W[:, j]))
        Wp = W.copy()
        Wm = W.copy()
        Wp[:, j] += h
        Wm[:, j] -= h
        out[:, j] = (value(Wp) - value(Wm)) / (2.0 * h)
    return out


def fd_hessian_from_values(value, W: np.ndarray) -> np.ndarray:
    """Second central differences of values, step eps^(1/4); (m, d, d) output."""
    W = np.asarray(W, dtype=float)
    m, d = W.shape
    out = np.empty((m, d, d))
    f0 = value(W)
    steps = FD_STEP_HESS * np.maximum(1.0, np.abs(W))
    for j in range(d):
        hj = steps[:, j]
        Wp = W.copy(); Wp[:, j] += hj
        Wm = W.copy(); Wm[:, j] -= hj
        out[:, j, j] = (value(Wp) - 2.0 * f0 + value(Wm)) / hj ** 2
        for k in range(j + 1, d):
            hk = steps[:, k]
            Wpp = W.copy(); Wpp[:, j] += hj; Wpp[:, k] += hk
            Wpm = W.copy(); Wpm[:, j] += hj; Wpm[:, k] -= hk
            Wmp = W.copy(); Wmp[:, j] -= hj; Wmp[:, k] += hk
            Wmm = W.copy(); Wmm[:, j] -= hj; Wmm[:, k] -= hk
            mixed = (value(Wpp) - value(Wpm) - value(Wmp) + value(Wmm)) \
                / (4.0 * hj * hk)
            out[:, j, k] = mixed
            out[:, k, j] = mixed
    return out


def fd_hessian_from_gradient(gradient, W: np.ndarray) -> np.ndarray:
    """Central differences of an analytic gradient, symmetrized; (m, d, d)."""
    W = np.asarray(W, dtype=float)
    m, d = W.shape
    out = np.empty((m, d, d))
    for j in range(d):
        h = FD_STEP_GRAD * np.maximum(1.0, np.abs(W[:, j]))
        Wp = W.copy()
        Wm = W.copy()
        Wp[:, j] += h
        Wm[:, j] -= h
        out[:, j, :] = (gradient(Wp) - gradient(Wm)) / (2.0 * h)[:, None]
    return (out + np.transpose(out, (0, 2, 1))) / 2.0


# ---------------------------------------------------------------------------
# horizontal calculus


def horizontal_gradient(u, P: Point) -> HorizontalVector:
    """Horizontal gradient (X_1 u, .., X_n u, Y_1 u, .., Y_n u) at P.

    u is a scalar field exposing gradient(W) -> (m, 2n+1) Euclidean gradients
    (analytic or finite-difference, per its strategy).
    """
    n = P.n
    G = u.gradient(P.as_array()[None, :])[0]
    if not np.all(np.isfinite(G)):
        raise ArithmeticError("non-finite derivatives at %r" % (P,))
    gx = G[:n] + 2.0 * P.y * G[2 * n]
    gy = G[n:2 * n] - 2.0 * P.x * G[2 * n]
    return HorizontalVector(np.concatenate([gx, gy]))


def horizontal_hessian_sym(u, P: Point) -> SymHorizontalMatrix:
    """Symmetrized horizontal Hessian at P.

    Assembled from the Euclidean Hessian alone: the first-order terms that
    appear in X_i Y_j and Y_j X_i individually are +-2 delta_ij u_t and cancel
    under symmetrization.
    """
    n = P.n
    H = u.hessian(P.as_array()[None, :])[0]
    if not np.all(np.isfinite(H)):
        raise ArithmeticError("non-finite second derivatives at %r" % (P,))
    it = 2 * n
    x, y = P.x, P.y
    M = np.empty((2 * n, 2 * n))
    for i in range(n):
        for j in range(n):
            M[i, j] = (H[i, j] + 2.0 * y[j] * H[i, it] + 2.0 * y[i] * H[j, it]
                       + 4.0 * y[i] * y[j] * H[it, it])
            M[n + i, n + j] = (H[n + i, n + j] - 2.0 * x[j] * H[n + i, it]
                               - 2.0 * x[i] * H[n + j, it]
                               + 4.0 * x[i] * x[j] * H[it, it])
            sym_xy = (H[i, n + j] - 2.0 * x[j] * H[i, it]
                      + 2.0 * y[i] * H[n + j, it]
                      - 4.0 * x[j] * y[i] * H[it, it])
            M[i, n + j] = sym_xy
            M[n + j, i] = sym_xy
    return SymHorizontalMatrix(M)


def taylor_residual(u, P: Point) -> float:
    """Remainder of the second-order horizontal Taylor expansion around 0.

    Returns u(P) minus

        u(0) + <grad_H u(0), (x, y)> + t du/dt(0)
             + 1/2 <D2* u(0) (x, y), (x, y)>,

    which is o(||P||^2) for smooth u. The t coefficient is 1: expanding
    g(s) = u(sx, sy, s^2 t) to second order in s puts 2 t du/dt inside
    g''(0), and the expansion takes half of it.
    """
    n = P.n
    origin = Point(np.zeros(n), np.zeros(n), 0.0)
    W0 = origin.as_array()[None, :]
    u0 = float(u.values(W0)[0])
    G0 = u.gradient(W0)[0]
    grad_h = horizontal_gradient(u, origin)
    hess = horizontal_hessian_sym(u, origin)
    xy = np.concatenate([P.x, P.y])
    model = (u0 + grad_h.coefficients @ xy + P.t * G0[2 * n]
             + 0.5 * (xy @ hess.entries @ xy))
    return float(u.values(P.as_array()[None, :])[0] - model)
