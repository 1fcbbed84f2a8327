"""Pointwise subelliptic operators: the horizontal Laplacian, the normalized
infinity-Laplacian, the p-Laplacian, and the divergence-form matrix.

The p-Laplacian evaluates as |grad|^(p-2) * core with core
(p-2)*delta_inf + delta_h; the core is the quantity that vanishes exactly on
smooth p-harmonic functions and is what the expansion residuals converge to,
so it is reported alongside the full value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hgroup import Point, horizontal_gradient, horizontal_hessian_sym


class DegenerateGradientError(ArithmeticError):
    """The horizontal gradient is numerically zero; delta_inf is undefined.

    Raised instead of dividing by ~0: the operators are only classical at
    points where the horizontal gradient does not vanish (those are exactly
    the test points the viscosity definitions admit).
    """


@dataclass(frozen=True)
class OperatorValue:
    """p-Laplacian evaluation: full value, gradient-free core, degeneracy flag."""

    value: float
    core: float
    gradient_norm: float
    degenerate: bool


def _gradient_threshold(u, P: Point) -> float:
    # refuse to normalize gradients smaller than roundoff on the field's scale
    return 1e-8 * (1.0 + abs(u.evaluate(P)))


def delta_h(u, P: Point) -> float:
    """Horizontal Laplacian: trace of the symmetrized horizontal Hessian."""
    return horizontal_hessian_sym(u, P).trace()


def delta_inf(u, P: Point, g_min: float | None = None) -> float:
    """Normalized horizontal infinity-Laplacian <D2* nu, nu>, nu = grad/|grad|."""
    grad = horizontal_gradient(u, P)
    gnorm = grad.norm()
    if gnorm < (g_min if g_min is not None else _gradient_threshold(u, P)):
        raise DegenerateGradientError(
            "|grad_H u| = %.3e at %r; delta_inf needs a nonvanishing "
            "horizontal gradient" % (gnorm, P))
    nu = grad.coefficients / gnorm
    return horizontal_hessian_sym(u, P).quad_form(nu)


def delta_p(u, P: Point, p: float, g_min: float | None = None) -> OperatorValue:
    """The p-Laplacian |grad|^(p-2) * ((p-2) delta_inf + delta_h), p in (1, inf).

    Returns an OperatorValue carrying both the full value and the core
    (p-2)*delta_inf + delta_h. For p = 2 the value reduces to delta_h exactly
    (the |grad|^0 factor is skipped, not computed).
    """
    p = float(p)
    if not (1.0 < p < np.inf):
        raise ValueError("p must lie in (1, inf)")
    grad = horizontal_gradient(u, P)
    gnorm = grad.norm()
    threshold = g_min if g_min is not None else _gradient_threshold(u, P)
    if gnorm < threshold:
        raise DegenerateGradientError(
            "|grad_H u| = %.3e at %r; delta_p needs a nonvanishing "
            "horizontal gradient" % (gnorm, P))
    hess = horizontal_hessian_sym(u, P)
    dh = hess.trace()
    nu = grad.coefficients / gnorm
    dinf = hess.quad_form(nu)
    core = (p - 2.0) * dinf + dh
    value = core if p == 2.0 else gnorm ** (p - 2.0) * core
    return OperatorValue(value=value, core=core, gradient_norm=gnorm,
                         degenerate=False)


def kohn_matrix(P: Point) -> np.ndarray:
    """Divergence-form coefficient matrix M(P) for n=1.

    Trace(M(P) . D2u(P)) with the Euclidean Hessian D2u reproduces delta_h.
    M is rank 2 with minimum eigenvalue 0: degenerate ellipticity.
    """
    if P.n != 1:
        raise ValueError("the 3x3 matrix form is specific to n=1")
    x, y = P.x[0], P.y[0]
    return np.array([
        [1.0, 0.0, 2.0 * y],
        [0.0, 1.0, -2.0 * x],
        [2.0 * y, -2.0 * x, 4.0 * (x * x + y * y)],
    ])
