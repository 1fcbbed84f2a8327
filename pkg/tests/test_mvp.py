"""Mean-value expansion verifications: residuals, constants, extrema, sandwich."""

import math

import numpy as np
import pytest

from hmvp.hgroup import point
from hmvp.fields import (
    make_coordinate, make_polynomial, make_square_norm, parse_polynomial,
)
from hmvp.gaugeball import QuadratureSpec, SearchConfig, coefficients
from hmvp.mvp import (
    ClassificationReport, ExpansionReport, classify_field, eps_sequence,
    expansion_residual, fit_limit, verify_extrema_limits,
    verify_mean_value_constant, verify_residual_limit,
    verify_two_sided_expansion,
)
from hmvp.operators import DegenerateGradientError

ORIGIN = point(0, 0, 0)
EPS3 = (0.2, 0.1, 0.05)
C1 = 1.0 / (3.0 * math.pi)


def test_eps_sequence_default():
    eps = eps_sequence()
    assert np.allclose(eps, 0.4 * 0.5 ** np.arange(6))
    assert np.all(np.diff(eps) < 0)
    with pytest.raises(ValueError):
        eps_sequence(eps0=-1.0)
    with pytest.raises(ValueError):
        eps_sequence(ratio=1.0)


def test_fit_limit_linear_data():
    eps = np.array([0.4, 0.2, 0.1, 0.05])
    limit, order, err = fit_limit(eps, 3.0 + 2.0 * eps)
    assert limit == pytest.approx(3.0, abs=1e-12)
    assert order == pytest.approx(1.0, abs=1e-6)
    assert err <= 1e-12


def test_fit_limit_constant_data():
    eps = np.array([0.4, 0.2, 0.1])
    limit, order, err = fit_limit(eps, np.full(3, 7.25))
    assert limit == pytest.approx(7.25, abs=1e-12)
    assert order is None


# -- expansion_residual ----------------------------------------------------


def test_residual_zero_for_coordinate():
    co = coefficients(1, 3.0)
    u = make_coordinate("x", 1)
    for eps in (0.4, 0.1):
        assert abs(expansion_residual(u, ORIGIN, eps, co)) <= 1e-10


def test_residual_t_field_off_axis():
    # t is an exact fixed point of the averaging away from the center axis
    co = coefficients(1, 3.0)
    u = make_coordinate("t", 1)
    P = point(1.0, 0.0, 0.0)
    for eps in EPS3:
        assert abs(expansion_residual(u, P, eps, co)) / eps ** 2 <= 1e-3


def test_residual_shift_invariance_exact():
    co = coefficients(1, 4.0)
    u = parse_polynomial("x + x^2", 1)
    shifted = parse_polynomial("x + x^2 + 5", 1)
    r0 = expansion_residual(u, ORIGIN, 0.2, co)
    r1 = expansion_residual(shifted, ORIGIN, 0.2, co)
    assert r1 == pytest.approx(r0, abs=5e-12)


def test_residual_positive_scaling_exact():
    co = coefficients(1, 4.0)
    u = parse_polynomial("x + x^2", 1)
    cu = parse_polynomial("3*x + 3*x^2", 1)
    r0 = expansion_residual(u, ORIGIN, 0.2, co)
    r1 = expansion_residual(cu, ORIGIN, 0.2, co)
    assert r1 == pytest.approx(3.0 * r0, rel=5e-10)


def test_residual_requires_positive_eps():
    co = coefficients(1, 2.0)
    with pytest.raises(ValueError):
        expansion_residual(make_coordinate("x", 1), ORIGIN, 0.0, co)


# -- verify_residual_limit -------------------------------------------------


def test_residual_limit_x_plus_x2_p4():
    p = 4.0
    co = coefficients(1, p)
    u = parse_polynomial("x + x^2", 1)
    rep = verify_residual_limit(u, ORIGIN, EPS3, coeffs=co)
    expect = co.beta * co.C * (2.0 + 2.0 * (p - 2.0))
    assert rep.predicted_limit == pytest.approx(expect, rel=1e-12)
    assert rep.fitted_limit == pytest.approx(expect, rel=0.05)
    assert rep.kind == "residual"
    assert len(rep.eps) == 3 and rep.residual is not None


def test_residual_limit_matches_core_generic():
    # the quantitative heart: limit of R/eps^2 equals beta C core at a
    # point with nondegenerate gradient
    p = 2.5
    co = coefficients(1, p)
    u = parse_polynomial("y + y^2", 1)
    rep = verify_residual_limit(u, ORIGIN, EPS3, coeffs=co)
    expect = co.beta * co.C * ((p - 2.0) * 2.0 + 2.0)
    assert rep.predicted_limit == pytest.approx(expect, rel=1e-12)
    assert rep.fitted_limit == pytest.approx(expect, rel=0.03)


def test_residual_limit_p2_ignores_gradient():
    # p = 2 keeps only Delta_H, so a degenerate gradient is harmless
    co = coefficients(1, 2.0)
    u = make_square_norm(1)
    rep = verify_residual_limit(u, ORIGIN, EPS3, coeffs=co)
    expect = co.C * 4.0
    assert rep.predicted_limit == pytest.approx(expect, rel=1e-9)
    assert rep.fitted_limit == pytest.approx(expect, rel=0.02)


# -- verify_mean_value_constant --------------------------------------------


def test_mean_value_constant_square_norm():
    rep = verify_mean_value_constant(make_square_norm(1), ORIGIN, EPS3)
    # exactness of the degree-2 expansion: eps-independent estimate
    assert np.allclose(rep.series["c_hat"], C1, atol=1e-9)
    assert rep.fitted_limit == pytest.approx(C1, abs=1e-9)
    assert rep.predicted_limit == pytest.approx(C1, abs=1e-9)


def test_mean_value_constant_x2_plus_t():
    # the t term averages out by symmetry, leaving the same constant
    u = parse_polynomial("x^2 + t", 1)
    rep = verify_mean_value_constant(u, ORIGIN, EPS3)
    assert rep.fitted_limit == pytest.approx(C1, abs=1e-8)


def test_mean_value_constant_degenerate():
    with pytest.raises(ArithmeticError):
        verify_mean_value_constant(make_coordinate("x", 1), ORIGIN, EPS3)


def test_mean_value_constant_n2():
    rep = verify_mean_value_constant(make_square_norm(2),
                                     point(0, 0, 0, 0, 0), EPS3,
                                     QuadratureSpec(levels=(16, 16, 16)))
    expect = 3.0 * math.pi / 128.0
    assert rep.fitted_limit == pytest.approx(expect, abs=1e-8)


# -- verify_extrema_limits -------------------------------------------------


def test_extrema_limits_pure_x():
    rep = verify_extrema_limits(make_coordinate("x", 1), ORIGIN, EPS3)
    assert rep.scalars["max_dir_err_extrapolated"] <= 1e-5
    assert rep.scalars["min_dir_err_extrapolated"] <= 1e-5
    assert abs(rep.fitted_limit) <= 1e-6  # |t|/eps^3 -> 0
    assert rep.predicted_limit == 0.0


def test_extrema_limits_x_plus_t():
    u = parse_polynomial("x + t", 1)
    rep = verify_extrema_limits(u, ORIGIN, (0.2, 0.1, 0.05, 0.025))
    assert rep.predicted_limit == pytest.approx(2.0, rel=1e-12)
    assert rep.scalars["half_curvature_modulus"] == pytest.approx(2.0)
    assert rep.fitted_limit == pytest.approx(2.0, rel=0.05)
    assert rep.scalars["max_dir_err_extrapolated"] <= 0.05
    assert rep.scalars["antipodal_gap_extrapolated"] <= 0.05


def test_extrema_limits_no_t_dependence():
    u = parse_polynomial("x + y", 1)
    rep = verify_extrema_limits(u, ORIGIN, EPS3)
    nu = np.array([1.0, 1.0]) / math.sqrt(2.0)
    assert rep.predicted_limit == 0.0
    assert abs(rep.fitted_limit) <= 1e-3
    last = rep.max_scaled_xy[-1]
    assert np.linalg.norm(last - nu) <= 1e-3


def test_extrema_limits_degenerate_gradient():
    with pytest.raises(DegenerateGradientError):
        verify_extrema_limits(make_coordinate("t", 1), ORIGIN, EPS3)


# -- verify_two_sided_expansion --------------------------------------------


def test_two_sided_trivial_linear():
    co = coefficients(1, 3.0)
    rep = verify_two_sided_expansion(make_coordinate("x", 1), ORIGIN, EPS3,
                                     coeffs=co)
    assert abs(rep.scalars["upper_gap_limit"]) <= 1e-6
    assert abs(rep.scalars["lower_gap_limit"]) <= 1e-6


def test_two_sided_x_plus_x2_p3():
    co = coefficients(1, 3.0)
    u = parse_polynomial("x + x^2", 1)
    rep = verify_two_sided_expansion(u, ORIGIN, (0.2, 0.1, 0.05, 0.025),
                                     coeffs=co)
    assert rep.scalars["upper_gap_limit"] >= -2e-3
    assert rep.scalars["lower_gap_limit"] <= 2e-3
    # the sandwich is tight here: both gaps vanish in the limit
    assert abs(rep.scalars["upper_gap_limit"]) <= 5e-3
    assert rep.fitted_limit == pytest.approx(rep.predicted_limit, rel=0.05)


def test_two_sided_reversed_branch():
    co = coefficients(1, 1.5)
    u = parse_polynomial("x + t", 1)
    rep = verify_two_sided_expansion(u, ORIGIN, EPS3, coeffs=co)
    assert rep.scalars["upper_gap_limit"] >= -2e-3
    assert rep.scalars["lower_gap_limit"] <= 2e-3


def test_two_sided_degenerate_gradient():
    co = coefficients(1, 3.0)
    with pytest.raises(DegenerateGradientError):
        verify_two_sided_expansion(make_square_norm(1), ORIGIN, EPS3,
                                   coeffs=co)


# -- classify_field --------------------------------------------------------


def test_classify_linear_harmonic():
    pts = [ORIGIN, point(0.5, -0.2, 0.1)]
    rep = classify_field(make_coordinate("x", 1), pts, 3.0, eps_seq=EPS3)
    assert rep.harmonic and rep.skipped == 0
    assert all(v.sign_consistent for v in rep.verdicts)
    assert "p-harmonic" in str(rep)


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_classify_t_field_off_axis(p):
    pts = [point(1.0, 0.0, 0.0), point(0.5, 0.5, -0.3)]
    rep = classify_field(make_coordinate("t", 1), pts, p, eps_seq=EPS3)
    assert rep.harmonic and rep.skipped == 0
    for v in rep.verdicts:
        assert v.core == pytest.approx(0.0, abs=1e-10)


def test_classify_square_norm_not_harmonic():
    rep = classify_field(make_square_norm(1), [ORIGIN], 2.0, eps_seq=EPS3)
    assert not rep.harmonic
    v = rep.verdicts[0]
    assert v.core == pytest.approx(4.0, abs=1e-7)
    assert v.residual_limit == pytest.approx(4.0 * C1, rel=0.02)
    assert v.sign_consistent
    assert "not p-harmonic" in str(rep)


def test_classify_skips_degenerate_points():
    pts = [ORIGIN, point(1.0, 0.0, 0.0)]
    rep = classify_field(make_coordinate("t", 1), pts, 3.0, eps_seq=EPS3)
    assert rep.skipped == 1
    assert rep.verdicts[0].degenerate
    assert rep.harmonic  # origin skipped, off-axis point passes


def test_classify_p_mismatch():
    co = coefficients(1, 3.0)
    with pytest.raises(ValueError):
        classify_field(make_coordinate("x", 1), [ORIGIN], 2.0, coeffs=co)


# -- report plumbing -------------------------------------------------------


def test_report_validation():
    with pytest.raises(ValueError):
        ExpansionReport(kind="bad", n=1, eps=np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        ExpansionReport(kind="bad", n=1, eps=np.array([0.2, 0.1]),
                        avg=np.array([1.0]))
    with pytest.raises(ValueError):
        ExpansionReport(kind="bad", n=1, eps=np.array([0.2, 0.1]),
                        avg=np.array([1.0, np.inf]))


def test_report_csv_layout():
    co = coefficients(1, 3.0)
    u = parse_polynomial("x + x^2", 1)
    rep = verify_residual_limit(u, ORIGIN, (0.2, 0.1), coeffs=co)
    text = rep.csv_text()
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    assert header == ["eps", "avg", "min", "max", "R", "R_over_eps2",
                      "xi_over_eps_1", "xi_over_eps_2", "t_over_eps3",
                      "predicted_limit"]
    assert len(lines) == 3
    first = lines[1].split(",")
    assert float(first[0]) == 0.2
    assert float(first[-1]) == pytest.approx(rep.predicted_limit, rel=1e-11)


def test_report_csv_missing_columns_blank():
    rep = verify_mean_value_constant(make_square_norm(1), ORIGIN, (0.2, 0.1))
    lines = rep.csv_text().strip().splitlines()
    row = lines[1].split(",")
    assert row[2] == "" and row[3] == ""  # no min/max for this verification
