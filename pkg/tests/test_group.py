"""Group axioms, gauge homogeneity, and horizontal calculus checks."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmvp import hgroup
from hmvp.hgroup import (
    Point, point, group_mul, group_inv, dilate, gauge_norm, gauge_distance,
    horizontal_gradient, horizontal_hessian_sym, taylor_residual,
)
from hmvp.fields import make_coordinate, make_polynomial, make_square_norm, parse_polynomial

coord = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)


def pts(*vals):
    return point(*vals)


def st_point(n=1):
    return st.tuples(*([coord] * (2 * n + 1))).map(lambda c: point(*c))


# -- product, inverse, dilation -------------------------------------------


def test_identity_element():
    P = pts(1.5, -2.0, 0.25)
    Q = group_mul(hgroup.ORIGIN, P)
    assert np.allclose(Q.as_array(), P.as_array())


def test_product_twist_values():
    # (1,0,0) o (0,1,0): x2.y1 - x1.y2 = -1, so t = -2
    Q = group_mul(pts(1, 0, 0), pts(0, 1, 0))
    assert np.allclose(Q.as_array(), [1, 1, -2])
    # reversed order flips the twist
    R = group_mul(pts(0, 1, 0), pts(1, 0, 0))
    assert np.allclose(R.as_array(), [1, 1, 2])


def test_inverse_values():
    P = pts(1, 2, 3)
    I = group_mul(P, group_inv(P))
    assert np.allclose(group_inv(P).as_array(), [-1, -2, -3])
    assert np.allclose(I.as_array(), 0.0)
    assert np.allclose(group_inv(hgroup.ORIGIN).as_array(), 0.0)


@settings(max_examples=60, deadline=None)
@given(st_point(), st_point(), st_point())
def test_associativity(P, Q, R):
    left = group_mul(group_mul(P, Q), R).as_array()
    right = group_mul(P, group_mul(Q, R)).as_array()
    scale = 1.0 + np.abs(left) + np.abs(right)
    assert np.all(np.abs(left - right) <= 1e-12 * scale)


@settings(max_examples=60, deadline=None)
@given(st_point())
def test_inverse_property(P):
    I = group_mul(P, group_inv(P)).as_array()
    assert np.all(np.abs(I) <= 1e-12 * (1.0 + np.abs(P.as_array())))


def test_dilate_values():
    assert np.allclose(dilate(1.0, pts(1, 1, 1)).as_array(), [1, 1, 1])
    assert np.allclose(dilate(2.0, pts(1, 1, 1)).as_array(), [2, 2, 4])
    with pytest.raises(ValueError):
        dilate(0.0, pts(1, 1, 1))
    with pytest.raises(ValueError):
        dilate(-1.0, pts(1, 1, 1))


@settings(max_examples=60, deadline=None)
@given(st_point(), st.floats(0.01, 10.0))
def test_gauge_homogeneity(P, r):
    assert gauge_norm(dilate(r, P)) == pytest.approx(r * gauge_norm(P), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st_point(), st_point(), st.floats(0.01, 10.0))
def test_dilation_homomorphism(P, Q, r):
    left = dilate(r, group_mul(P, Q)).as_array()
    right = group_mul(dilate(r, P), dilate(r, Q)).as_array()
    scale = 1.0 + np.abs(left) + np.abs(right)
    assert np.all(np.abs(left - right) <= 1e-12 * scale)


# -- gauge norm and distance ----------------------------------------------


def test_gauge_norm_values():
    assert gauge_norm(pts(1, 0, 0)) == pytest.approx(1.0)
    assert gauge_norm(pts(0, 0, 1)) == pytest.approx(1.0)
    # (1,1,1): (2^2 + 1)^(1/4) = 5^(1/4)
    assert gauge_norm(pts(1, 1, 1)) == pytest.approx(5.0 ** 0.25, rel=1e-15)


def test_gauge_distance_values():
    P, Q = pts(1, 0, 0), pts(0, 1, 0)
    assert gauge_distance(P, P) == 0.0
    assert gauge_distance(hgroup.ORIGIN, Q) == pytest.approx(gauge_norm(Q))
    # ||(-1,0,0) o (0,1,0)|| = ||(-1,1,2)|| = 8^(1/4)
    assert gauge_distance(P, Q) == pytest.approx(8.0 ** 0.25, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st_point(), st_point())
def test_gauge_distance_symmetry(P, Q):
    assert gauge_distance(P, Q) == pytest.approx(gauge_distance(Q, P), abs=1e-11)


def test_batch_ops_match_scalar():
    rng = np.random.default_rng(7)
    W = rng.uniform(-2, 2, size=(20, 3))
    P0 = pts(0.3, -1.2, 0.7)
    WT = hgroup.group_mul_batch(P0, W)
    for row, out in zip(W, WT):
        expect = group_mul(P0, Point.from_array(row)).as_array()
        assert np.allclose(out, expect, atol=1e-14)
    assert np.allclose(hgroup.gauge_norm_batch(W),
                       [gauge_norm(Point.from_array(r)) for r in W])
    assert np.allclose(hgroup.dilate_batch(0.5, W),
                       [dilate(0.5, Point.from_array(r)).as_array() for r in W])


# -- point/vector invariants ----------------------------------------------


def test_point_validation():
    with pytest.raises(ValueError):
        Point(np.array([1.0, 2.0]), np.array([1.0]), 0.0)
    with pytest.raises(ValueError):
        point(np.nan, 0, 0)


def test_n2_product():
    P = Point([1.0, 0.0], [0.0, 0.0], 0.0)
    Q = Point([0.0, 0.0], [1.0, 0.0], 0.0)
    R = group_mul(P, Q)
    assert R.n == 2
    assert R.t == pytest.approx(-2.0)


# -- horizontal calculus ---------------------------------------------------


def test_horizontal_gradient_examples():
    u = make_coordinate("x", 1)
    g = horizontal_gradient(u, pts(3, 4, 5))
    assert np.allclose(g.coefficients, [1, 0])
    # u = t: grad_H = (2y, -2x)
    g = horizontal_gradient(make_coordinate("t", 1), pts(1, 2, 0))
    assert np.allclose(g.coefficients, [4, -2])
    # u = |x|^2 + |y|^2 has no t dependence
    g = horizontal_gradient(make_square_norm(1), pts(1, 2, 5))
    assert np.allclose(g.coefficients, [2, 4])


def test_horizontal_hessian_examples():
    H = horizontal_hessian_sym(make_coordinate("x", 1), pts(0.3, -0.7, 0.1))
    assert np.allclose(H.entries, 0.0)
    H = horizontal_hessian_sym(make_square_norm(1), pts(1, 2, 3))
    assert np.allclose(H.entries, 2.0 * np.eye(2))
    # u = t: XY t = -2, YX t = +2, the symmetrization cancels exactly
    H = horizontal_hessian_sym(make_coordinate("t", 1), pts(1.3, 0.4, -2.0))
    assert np.allclose(H.entries, 0.0, atol=1e-12)


@pytest.mark.parametrize("spec", ["x^2*y + t^2", "x*t - y^3", "x^2 + y^2 + t"])
def test_commutator_identity(spec):
    # (X Y - Y X) u = -4 du/dt, via nested finite differences of X u and Y u
    u = parse_polynomial(spec, 1)
    rng = np.random.default_rng(3)
    for _ in range(5):
        P = Point.from_array(rng.uniform(-1.5, 1.5, 3))

        def Xu(W):
            G = u.gradient(W)
            return G[:, 0] + 2.0 * W[:, 1] * G[:, 2]

        def Yu(W):
            G = u.gradient(W)
            return G[:, 1] - 2.0 * W[:, 0] * G[:, 2]

        W = P.as_array()[None, :]
        XYu = hgroup.fd_gradient(Yu, W)[0]
        YXu = hgroup.fd_gradient(Xu, W)[0]
        xy_minus_yx = (XYu[0] + 2.0 * P.y[0] * XYu[2]) \
            - (YXu[1] - 2.0 * P.x[0] * YXu[2])
        ut = u.gradient(W)[0, 2]
        assert xy_minus_yx == pytest.approx(-4.0 * ut, rel=1e-6, abs=1e-6)


def test_fd_matches_analytic():
    u = parse_polynomial("x^2*y - 2*t^2 + x*y*t", 1)
    ufd = u.with_strategy("fd")
    rng = np.random.default_rng(11)
    W = rng.uniform(-1, 1, size=(10, 3))
    assert np.allclose(ufd.gradient(W), u.gradient(W), rtol=1e-6, atol=1e-8)
    assert np.allclose(ufd.hessian(W), u.hessian(W), rtol=1e-5, atol=1e-5)


def test_taylor_residual_exactness():
    # affine and degree-2 homogeneous fields are reproduced exactly
    for spec in ["x + 2*y - 3*t", "x^2 + y^2", "t", "x*y"]:
        u = parse_polynomial(spec, 1)
        r = taylor_residual(u, pts(0.3, 0.2, 0.05))
        assert abs(r) <= 1e-12, spec


def test_taylor_residual_cubic_rate():
    # u = x^3 at P = delta_s(1,0,0): residual = s^3, ||P||^2 = s^2
    u = parse_polynomial("x^3", 1)
    for s in [0.1, 0.05, 0.025]:
        P = dilate(s, pts(1, 0, 0))
        r = taylor_residual(u, P)
        assert r / gauge_norm(P) ** 2 == pytest.approx(s, rel=1e-9)


def test_horizontal_hessian_cross_term():
    # u = x*t at (x,y,t): sym(XY) entry carries the -2x u_xt style terms;
    # cross-check the full assembled matrix against nested differences
    u = parse_polynomial("x*t + y^2*t", 1)
    P = pts(0.7, -0.4, 0.2)
    H = horizontal_hessian_sym(u, P).entries

    def Xu(W):
        G = u.gradient(W)
        return G[:, 0] + 2.0 * W[:, 1] * G[:, 2]

    def Yu(W):
        G = u.gradient(W)
        return G[:, 1] - 2.0 * W[:, 0] * G[:, 2]

    W = P.as_array()[None, :]
    dXu = hgroup.fd_gradient(Xu, W)[0]
    dYu = hgroup.fd_gradient(Yu, W)[0]
    XXu = dXu[0] + 2.0 * P.y[0] * dXu[2]
    YYu = dYu[1] - 2.0 * P.x[0] * dYu[2]
    XYu = dYu[0] + 2.0 * P.y[0] * dYu[2]
    YXu = dXu[1] - 2.0 * P.x[0] * dXu[2]
    assert H[0, 0] == pytest.approx(XXu, rel=1e-7, abs=1e-7)
    assert H[1, 1] == pytest.approx(YYu, rel=1e-7, abs=1e-7)
    assert H[0, 1] == pytest.approx((XYu + YXu) / 2.0, rel=1e-7, abs=1e-7)
