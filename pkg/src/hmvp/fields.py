"""Closed-form scalar test fields with exact derivatives.

Fields evaluate on batches of coordinate rows (m, 2n+1) so quadrature and the
grid solver stay vectorized; single-point evaluation wraps the same callables.
The analytic gradients and Hessians here are the ground truth that the
finite-difference strategy is cross-checked against.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import hgroup
from .hgroup import Point


@dataclass(frozen=True)
class ScalarField:
    """Evaluatable scalar field u: H^n -> R with a differentiation strategy.

    Parameters
    ----------
    name : str
        Identifier, also used by the CLI.
    n : int
        Heisenberg parameter; coordinates have length 2n+1.
    value : callable
        (m, 2n+1) coordinate rows -> (m,) values.
    euclidean_gradient : callable, optional
        (m, 2n+1) -> (m, 2n+1). When present the strategy is "analytic".
    euclidean_hessian : callable, optional
        (m, 2n+1) -> (m, 2n+1, 2n+1).
    strategy : str
        "analytic" or "fd". With "fd", derivatives come from central
        differences of values regardless of callbacks.

    Notes
    -----
    A field with an analytic gradient but no Hessian callback gets its Hessian
    from central differences of the gradient, which is roughly three decades
    more accurate than second differences of values.
    """

    name: str
    n: int
    value: Callable[[np.ndarray], np.ndarray]
    euclidean_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    euclidean_hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    strategy: str = "analytic"
    # extra structure some consumers exploit (solver kernel, CLI round-trip)
    poly_terms: Optional[tuple] = field(default=None, compare=False)
    gauge_gamma: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        if self.strategy not in ("analytic", "fd"):
            raise ValueError("strategy must be 'analytic' or 'fd'")
        if self.strategy == "analytic" and self.euclidean_gradient is None \
                and self.poly_terms is None:
            # nothing analytic to differentiate; demote to finite differences
            object.__setattr__(self, "strategy", "fd")

    # -- evaluation --------------------------------------------------------

    def values(self, W: np.ndarray) -> np.ndarray:
        return np.asarray(self.value(np.asarray(W, dtype=float)), dtype=float)

    def evaluate(self, P: Point) -> float:
        return float(self.values(P.as_array()[None, :])[0])

    def __call__(self, P: Point) -> float:
        return self.evaluate(P)

    # -- derivatives -------------------------------------------------------

    def gradient(self, W: np.ndarray) -> np.ndarray:
        if self.strategy == "analytic" and self.euclidean_gradient is not None:
            return np.asarray(self.euclidean_gradient(np.asarray(W, float)))
        return hgroup.fd_gradient(self.values, W)

    def hessian(self, W: np.ndarray) -> np.ndarray:
        if self.strategy == "analytic":
            if self.euclidean_hessian is not None:
                return np.asarray(self.euclidean_hessian(np.asarray(W, float)))
            if self.euclidean_gradient is not None:
                return hgroup.fd_hessian_from_gradient(self.gradient, W)
        return hgroup.fd_hessian_from_values(self.values, W)

    def with_strategy(self, strategy: str) -> "ScalarField":
        return ScalarField(self.name, self.n, self.value,
                           self.euclidean_gradient, self.euclidean_hessian,
                           strategy, self.poly_terms, self.gauge_gamma)


# ---------------------------------------------------------------------------
# polynomial fields: exact term algebra over (x_1..x_n, y_1..y_n, t)


def _poly_value(terms, W):
    out = np.zeros(W.shape[0])
    for coeff, exps in terms:
        mono = np.full(W.shape[0], coeff)
        for j, e in enumerate(exps):
            if e:
                mono = mono * W[:, j] ** e
        out += mono
    return out


def _poly_diff(terms, j):
    """Differentiate a term list with respect to coordinate j."""
    out = []
    for coeff, exps in terms:
        e = exps[j]
        if e:
            new = list(exps)
            new[j] = e - 1
            out.append((coeff * e, tuple(new)))
    return out


def make_polynomial(terms, n: int = 1, name: Optional[str] = None) -> ScalarField:
    """Polynomial field from a list of (coefficient, exponents) terms.

    Exponents are tuples of length 2n+1 in the order x_1..x_n, y_1..y_n, t.
    Derivatives are exact.
    """
    terms = tuple((float(c), tuple(int(e) for e in exps)) for c, exps in terms)
    d = 2 * n + 1
    for _, exps in terms:
        if len(exps) != d or any(e < 0 for e in exps):
            raise ValueError("each exponent tuple must have length %d, entries >= 0" % d)

    grads = [_poly_diff(terms, j) for j in range(d)]
    hesses = [[_poly_diff(grads[j], k) for k in range(d)] for j in range(d)]

    def value(W):
        return _poly_value(terms, W)

    def gradient(W):
        out = np.empty((W.shape[0], d))
        for j in range(d):
            out[:, j] = _poly_value(grads[j], W)
        return out

    def hessian(W):
        out = np.empty((W.shape[0], d, d))
        for j in range(d):
            for k in range(d):
                out[:, j, k] = _poly_value(hesses[j][k], W)
        return out

    return ScalarField(name or "poly", n, value, gradient, hessian,
                       poly_terms=terms)


_COORD_NAMES = {"x": ("x", 1), "y": ("y", 1), "t": ("t", 0)}


def _coord_index(token: str, n: int) -> int:
    """Map a coordinate name (x, y, x1, y2, t) to its column index."""
    if token == "t":
        return 2 * n
    m = re.fullmatch(r"([xy])(\d*)", token)
    if not m:
        raise ValueError("unknown coordinate %r" % token)
    k = int(m.group(2)) if m.group(2) else 1
    if not 1 <= k <= n:
        raise ValueError("coordinate index out of range for n=%d: %r" % (n, token))
    return (k - 1) if m.group(1) == "x" else (n + k - 1)


def parse_polynomial(text: str, n: int = 1) -> ScalarField:
    """Parse expressions like "x + x^2", "2*x*t - y^3" into a polynomial field.

    Grammar: terms joined by + or -, each term a product of numeric factors
    and coordinate powers (x, y, x1..xn, y1..yn, t, optional ^k).
    """
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty polynomial spec")
    # split into signed terms
    chunks = re.findall(r"[+-]?[^+-]+", s)
    terms = []
    d = 2 * n + 1
    for chunk in chunks:
        sign = 1.0
        body = chunk
        while body and body[0] in "+-":
            if body[0] == "-":
                sign = -sign
            body = body[1:]
        if not body:
            raise ValueError("malformed term in %r" % text)
        coeff = sign
        exps = [0] * d
        for factor in body.split("*"):
            m = re.fullmatch(r"([a-z]\d*)(?:\^(\d+))?", factor)
            if m:
                j = _coord_index(m.group(1), n)
                exps[j] += int(m.group(2)) if m.group(2) else 1
            else:
                try:
                    coeff *= float(factor)
                except ValueError:
                    raise ValueError("bad factor %r in %r" % (factor, text)) from None
        terms.append((coeff, tuple(exps)))
    return make_polynomial(terms, n=n, name="poly:" + text.replace(" ", ""))


# ---------------------------------------------------------------------------
# library fields


def make_coordinate(name: str, n: int = 1) -> ScalarField:
    """Coordinate field x_k, y_k, or t as an exact polynomial."""
    j = _coord_index(name, n)
    d = 2 * n + 1
    exps = [0] * d
    exps[j] = 1
    return make_polynomial([(1.0, tuple(exps))], n=n, name=name)


def make_square_norm(n: int = 1) -> ScalarField:
    """|x|^2 + |y|^2; its horizontal Laplacian is 4n everywhere."""
    d = 2 * n + 1
    terms = []
    for j in range(2 * n):
        exps = [0] * d
        exps[j] = 2
        terms.append((1.0, tuple(exps)))
    return make_polynomial(terms, n=n, name="sqnorm")


def make_gauge_power(gamma: float, n: int = 1) -> ScalarField:
    """||P||^gamma with analytic first derivatives; Hessian by differences.

    gamma = 0 is rejected (degenerate constant). For gamma < 4 the field is
    singular at the origin; evaluation raises there when gamma < 0.
    """
    gamma = float(gamma)
    if gamma == 0.0:
        raise ValueError("gamma must be nonzero")
    d = 2 * n + 1

    def norm4(W):
        rho2 = np.sum(W[:, :2 * n] ** 2, axis=1)
        return rho2 ** 2 + W[:, -1] ** 2, rho2

    def value(W):
        n4, _ = norm4(W)
        if gamma < 0 and np.any(n4 == 0.0):
            raise ZeroDivisionError("gauge power with negative exponent at the origin")
        return n4 ** (gamma / 4.0)

    def gradient(W):
        # d||P||/dx_i = rho^2 x_i / N^3, d||P||/dt = t / (2 N^3)
        n4, rho2 = norm4(W)
        if np.any(n4 == 0.0):
            raise ZeroDivisionError("gauge power gradient at the origin")
        fac = gamma * n4 ** (gamma / 4.0 - 1.0)
        out = np.empty((W.shape[0], d))
        out[:, :2 * n] = fac[:, None] * rho2[:, None] * W[:, :2 * n]
        out[:, -1] = fac * W[:, -1] / 2.0
        return out

    return ScalarField("gauge^%g" % gamma, n, value, gradient,
                       gauge_gamma=gamma)


def left_translate_field(u: ScalarField, P0: Point) -> ScalarField:
    """The field v(Q) = u(P0 o Q).

    The chart of the left translation is affine in Q with constant Jacobian,
    so analytic derivatives push forward exactly (chain rule, no curvature
    term).
    """
    if P0.n != u.n:
        raise ValueError("dimension mismatch")
    n = u.n
    d = 2 * n + 1
    # Jacobian J[a][b] = d(P0 o Q)_a / dQ_b; only the t row is non-trivial
    J = np.eye(d)
    J[d - 1, :n] = 2.0 * P0.y
    J[d - 1, n:2 * n] = -2.0 * P0.x

    def shift(W):
        return hgroup.group_mul_batch(P0, W)

    def value(W):
        return u.values(shift(W))

    gradient = None
    hessian = None
    if u.strategy == "analytic" and u.euclidean_gradient is not None:
        def gradient(W):
            return u.gradient(shift(W)) @ J

        if u.euclidean_hessian is not None:
            def hessian(W):
                H = u.hessian(shift(W))
                return np.einsum("ca,mcd,db->mab", J, H, J)

    return ScalarField("L[%s]" % u.name, n, value, gradient, hessian,
                       strategy=u.strategy)
