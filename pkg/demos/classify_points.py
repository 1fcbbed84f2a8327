"""
Pointwise operators and p-harmonicity checks
============================================

delta_h, delta_inf, and delta_p evaluate the horizontal Laplacian, the
normalized infinity Laplacian, and the full p-Laplacian at a point.
classify_field compares the measured expansion limit against the
operator core over a sample of points and returns a verdict.
"""

import numpy as np

from hmvp import (
    Point, point, parse_polynomial, make_gauge_power, make_square_norm,
    delta_h, delta_inf, delta_p, classify_field,
)

# Operator values on a quadratic polynomial.
u = parse_polynomial("x^2 - y^2 + x*y", 1)
P = point(0.7, -0.4, 0.2)
print("u = x^2 - y^2 + x*y at", P.as_array())
print("  delta_h  =", delta_h(u, P))
print("  delta_inf=", delta_inf(u, P))
for p in (1.5, 2.0, 4.0):
    print(f"  delta_{p:<3} =", delta_p(u, P, p).value)

# The gauge power ||P||^(2-Q) is the fundamental-solution profile for
# p = 2: delta_2 vanishes wherever the field is smooth.
w = make_gauge_power(-2.0, 1)
print("\n||P||^-2 at (1, 0.5, 0.3): delta_2 =",
      delta_p(w, point(1, 0.5, 0.3), 2.0).value)

# classify_field runs the expansion at each sample point and checks the
# fitted limit against beta*C*core.
rng = np.random.default_rng(5)
pts = [Point.from_array(rng.uniform(0.4, 1.2, 3)) for _ in range(4)]

for spec, p in (("t", 2.0), ("t", 4.0), ("x", 1.5)):
    rep = classify_field(parse_polynomial(spec, 1), pts, p)
    print(f"\nu = {spec}, p = {p}: {rep}")

# A field that is not p-harmonic gets flagged: the square norm has
# delta_2 = 4 everywhere, and the measured limit is beta*C*4 != 0.
rep = classify_field(make_square_norm(1), pts, 2.0)
print(f"\nu = |z|^2, p = 2: {rep}")
for v in rep.verdicts:
    print(f"  at {np.round(v.point.as_array(), 3)}: core={v.core:.4f} "
          f"limit={v.residual_limit:.6f} harmonic={v.harmonic}")
