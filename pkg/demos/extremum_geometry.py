"""
Where the ball extrema live
===========================

For a field with nonvanishing horizontal gradient, the maximum over the
shrinking gauge ball B(0, eps) drifts toward the horizontal gradient
direction, while its vertical offset scales like eps^3 with a ratio set
by the imaginary curvature |p| = 4 |u_t| / |grad_H u|.
"""

import numpy as np

from hmvp import point, parse_polynomial, verify_extrema_limits

u = parse_polynomial("x + t", 1)
report = verify_extrema_limits(u, point(0, 0, 0),
                               eps_seq=[0.2, 0.1, 0.05, 0.025])

# grad_H u(0) = (1, 0), so the scaled max direction tends to (1, 0);
# u_t = 1 and |grad| = 1 give |t_eps| / eps^3 -> |p|/2 = 2.
print("eps        max dir (scaled)          |t|/eps^3")
for k, eps in enumerate(report.eps):
    d = report.max_scaled_xy[k]
    print(f"{eps:7.4f}   ({d[0]:+.6f}, {d[1]:+.6f})   {report.max_t_over_eps3[k]:.6f}")

s = report.scalars
print("\nextrapolated direction error:", s["max_dir_err_extrapolated"])
print("extrapolated |t|/eps^3:      ", s["t_limit_fitted"],
      " (predicted", s["t_limit_predicted"], ")")

# Min and max directions are antipodal to leading order.
print("antipodality gap:            ", s["antipodal_gap_extrapolated"])

# The same machinery on a field with a different curvature ratio.
v = parse_polynomial("2*x + y - 3*t", 1)
rep = verify_extrema_limits(v, point(0, 0, 0), eps_seq=[0.2, 0.1, 0.05])
print("\nu = 2x + y - 3t:")
print("  predicted |t|/eps^3 limit:", rep.scalars["t_limit_predicted"])
print("  fitted    |t|/eps^3 limit:", rep.scalars["t_limit_fitted"])
