"""
From group arithmetic to the mean value expansion
=================================================

A walk through the core objects: the group law, gauge balls, the
calibrated curvature constant, and the asymptotic expansion

    u(P) = alpha/2 * (min + max over B(P, eps)) + beta * avg - R(eps)

whose residual R(eps)/eps^2 recovers the p-Laplacian core at P.
"""

import math

import numpy as np

from hmvp import (
    point, group_mul, group_inv, gauge_norm, dilate,
    parse_polynomial, make_square_norm,
    BallSpec, QuadratureSpec, ball_average, c_constant, coefficients,
    verify_residual_limit,
)

# The group product twists the vertical coordinate; inverses are exact.
P = point(1.0, 2.0, 0.5)
Q = point(-0.3, 0.7, 1.0)
print("P o Q        =", group_mul(P, Q).as_array())
print("P o P^-1     =", group_mul(P, group_inv(P)).as_array())
print("|delta_2 P|  =", gauge_norm(dilate(2.0, P)),
      " (should be 2x", gauge_norm(P), ")")

# The constant C(n) is calibrated so that the average of |x|^2 + |y|^2
# over the unit gauge ball equals 4n * C(n).  At n=1 that average is
# 4/(3 pi), a closed form the quadrature should hit to many digits.
quad = QuadratureSpec(method="product", levels=(64, 64, 128))
avg = ball_average(make_square_norm(1), BallSpec(point(0, 0, 0), 1.0), quad=quad)
print("\navg |z|^2 over B(0,1):", avg.value, " vs 4/(3 pi) =", 4 / (3 * math.pi))
print("calibrated C(1):      ", c_constant(1), " vs 1/(3 pi) =", 1 / (3 * math.pi))

# alpha and beta follow from C and p, and always sum to one.
for p in (1.5, 2.0, 4.0):
    co = coefficients(1, p)
    print(f"p={p}: alpha={co.alpha:.6f} beta={co.beta:.6f} sum={co.alpha + co.beta}")

# Now the expansion itself.  u = x + x^2 is not p-harmonic: its residual
# ratio R(eps)/eps^2 tends to beta*C*(Delta_H + (p-2) Delta_inf)u(0),
# which is beta*C*(2 + 2(p-2)) here.
u = parse_polynomial("x + x^2", 1)
co = coefficients(1, 4.0)
report = verify_residual_limit(u, point(0, 0, 0), coeffs=co)
print("\nu = x + x^2, p = 4:")
for eps, ratio in zip(report.eps, report.residual_over_eps2):
    print(f"  eps={eps:7.4f}   R/eps^2 = {ratio:.10f}")
print("  extrapolated:", report.fitted_limit)
print("  predicted:   ", report.predicted_limit)

# A p-harmonic pair makes the same limit vanish: the vertical coordinate
# t solves every p-Laplace equation away from the t-axis.
report = verify_residual_limit(parse_polynomial("t", 1), point(1, 0, 0), coeffs=co)
print("\nu = t at (1,0,0), p = 4: extrapolated R/eps^2 =", report.fitted_limit)
