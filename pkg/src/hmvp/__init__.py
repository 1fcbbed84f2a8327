"""Numerical laboratory for mean-value calculus on the Heisenberg group.

Group algebra and horizontal derivatives (hgroup), closed-form test fields
(fields), the subelliptic operators (operators), gauge-ball geometry and
quadrature (gaugeball), asymptotic expansion verification (mvp), a lattice
fixed-point solver (solver), and a CLI front end (cli).
"""

from .hgroup import (
    Point,
    HorizontalVector,
    SymHorizontalMatrix,
    point,
    group_mul,
    group_inv,
    dilate,
    gauge_norm,
    gauge_distance,
    horizontal_gradient,
    horizontal_hessian_sym,
    taylor_residual,
)
from .fields import (
    ScalarField,
    make_coordinate,
    make_square_norm,
    make_gauge_power,
    make_polynomial,
    parse_polynomial,
    left_translate_field,
)
from .operators import (
    DegenerateGradientError,
    OperatorValue,
    delta_h,
    delta_inf,
    delta_p,
    kohn_matrix,
)
from .gaugeball import (
    BallSpec,
    MVPCoefficients,
    QuadratureSpec,
    SearchConfig,
    alpha_beta,
    ball_average,
    ball_extrema,
    ball_volume,
    ball_volume_estimate,
    c_constant,
    coefficients,
)
from .mvp import (
    ClassificationReport,
    ExpansionReport,
    classify_field,
    eps_sequence,
    expansion_residual,
    verify_extrema_limits,
    verify_mean_value_constant,
    verify_residual_limit,
    verify_two_sided_expansion,
)
from .solver import (
    GridProblem,
    GridSolution,
    dirichlet_solve,
    dpp_apply,
    error_report,
    sample_node_set,
)

__version__ = "0.1.0"
