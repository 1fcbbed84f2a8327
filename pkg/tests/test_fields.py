"""Field library: exact values, derivative cross-checks, parsing, translation."""

import numpy as np
import pytest

from hmvp.hgroup import Point, point, horizontal_gradient
from hmvp.fields import (
    ScalarField, make_coordinate, make_square_norm, make_gauge_power,
    make_polynomial, parse_polynomial, left_translate_field,
)


def seeded_points(n=1, count=10, lo=-2.0, hi=2.0, seed=5, avoid_origin=0.0):
    rng = np.random.default_rng(seed)
    W = rng.uniform(lo, hi, size=(count, 2 * n + 1))
    if avoid_origin:
        # push points with small gauge norm outward
        rho2 = np.sum(W[:, :2 * n] ** 2, axis=1)
        small = (rho2 ** 2 + W[:, -1] ** 2) ** 0.25 < avoid_origin
        W[small, 0] += 2.0 * avoid_origin
    return W


# -- coordinates and polynomials ------------------------------------------


def test_coordinate_values():
    assert make_coordinate("x", 1)(point(3, 4, 5)) == 3.0
    assert make_coordinate("y", 1)(point(3, 4, 5)) == 4.0
    assert make_coordinate("t", 1)(point(3, 4, 5)) == 5.0
    assert make_coordinate("x2", 2)(Point([3, 7], [4, 8], 5)) == 7.0
    with pytest.raises(ValueError):
        make_coordinate("x3", 2)
    with pytest.raises(ValueError):
        make_coordinate("z", 1)


def test_polynomial_values_and_derivatives():
    u = make_polynomial([(1.0, (1, 0, 0)), (1.0, (0, 0, 1))], n=1)  # x + t
    assert u(point(1, 0, 2)) == 3.0
    W = seeded_points()
    G = u.gradient(W)
    assert np.allclose(G, np.array([1.0, 0.0, 1.0]))
    assert np.allclose(u.hessian(W), 0.0)


def test_polynomial_spec_validation():
    with pytest.raises(ValueError):
        make_polynomial([(1.0, (1, 0))], n=1)      # wrong arity
    with pytest.raises(ValueError):
        make_polynomial([(1.0, (1, -1, 0))], n=1)  # negative exponent


@pytest.mark.parametrize("text,at,expect", [
    ("x + t", (1, 0, 2), 3.0),
    ("x+x^2", (2, 0, 0), 6.0),
    ("2*x*y - t^2", (3, 4, 5), -1.0),
    ("-x + 0.5*t", (1, 1, 4), 1.0),
])
def test_parse_polynomial(text, at, expect):
    u = parse_polynomial(text, 1)
    assert u(point(*at)) == pytest.approx(expect, rel=1e-15)


def test_parse_polynomial_rejects_junk():
    for bad in ["", "x倍", "x^", "q+1", "x**2"]:
        with pytest.raises(ValueError):
            parse_polynomial(bad, 1)


def test_square_norm():
    u = make_square_norm(1)
    assert u(point(1, 2, 5)) == 5.0
    u2 = make_square_norm(2)
    assert u2(Point([1, 2], [3, 4], -7)) == 30.0


# -- gauge powers ----------------------------------------------------------


def test_gauge_power_values():
    u = make_gauge_power(1.0, 1)
    assert u(point(1, 0, 0)) == pytest.approx(1.0)
    assert u(point(0, 0, 1)) == pytest.approx(1.0)
    u4 = make_gauge_power(4.0, 1)
    assert u4(point(1, 1, 1)) == pytest.approx(5.0)


def test_gauge_power_rejects_zero_exponent():
    with pytest.raises(ValueError):
        make_gauge_power(0.0, 1)


def test_gauge_power_origin_domain_error():
    u = make_gauge_power(-2.0, 1)
    with pytest.raises(ZeroDivisionError):
        u(point(0, 0, 0))


@pytest.mark.parametrize("gamma,n", [(-2.0, 1), (-0.5, 1), (1.0, 1), (3.0, 1),
                                     (-4.0, 2), (-2.0 / 3.0, 2)])
def test_gauge_power_gradient_vs_fd(gamma, n):
    u = make_gauge_power(gamma, n)
    ufd = u.with_strategy("fd")
    W = seeded_points(n=n, count=10, seed=12, avoid_origin=0.4)
    G, Gfd = u.gradient(W), ufd.gradient(W)
    assert np.allclose(G, Gfd, rtol=1e-6, atol=1e-8)


def test_analytic_fd_cross_validation_library():
    # invariant: every analytic field passes FD cross-checks at seeded points
    lib = [make_coordinate("x", 1), make_coordinate("t", 1),
           make_square_norm(1), parse_polynomial("x^2*y - t^2 + x*t", 1)]
    W = seeded_points(count=10, seed=42)
    for u in lib:
        ufd = u.with_strategy("fd")
        assert np.allclose(u.gradient(W), ufd.gradient(W), rtol=1e-6, atol=1e-6)
        assert np.allclose(u.hessian(W), ufd.hessian(W), rtol=1e-5, atol=1e-4)


# -- left translation ------------------------------------------------------


def test_left_translate_values():
    u = parse_polynomial("x^2 + t", 1)
    P0 = point(0.5, -1.0, 2.0)
    v = left_translate_field(u, P0)
    # v(0) = u(P0)
    assert v(point(0, 0, 0)) == pytest.approx(u(P0), rel=1e-15)
    # identity translation changes nothing
    vid = left_translate_field(u, point(0, 0, 0))
    for w in seeded_points(count=5, seed=1):
        assert vid(Point.from_array(w)) == pytest.approx(u(Point.from_array(w)))


def test_left_translate_gradient_invariance():
    # the horizontal frame is left-invariant: grad_H v(0) = grad_H u(P0)
    u = parse_polynomial("x^2*y + y*t - 2*x", 1)
    P0 = point(0.8, 0.3, -0.6)
    v = left_translate_field(u, P0)
    g_v = horizontal_gradient(v, point(0, 0, 0)).coefficients
    g_u = horizontal_gradient(u, P0).coefficients
    assert np.allclose(g_v, g_u, rtol=1e-12, atol=1e-12)
    # and the same through pure finite differences on both sides
    vfd = v.with_strategy("fd")
    ufd = u.with_strategy("fd")
    g_vfd = horizontal_gradient(vfd, point(0, 0, 0)).coefficients
    g_ufd = horizontal_gradient(ufd, P0).coefficients
    assert np.allclose(g_vfd, g_ufd, rtol=1e-6, atol=1e-6)


def test_left_translate_analytic_derivatives():
    u = parse_polynomial("x^2 + y*t", 1)
    P0 = point(-0.4, 1.1, 0.9)
    v = left_translate_field(u, P0)
    vfd = v.with_strategy("fd")
    W = seeded_points(count=8, seed=9)
    assert np.allclose(v.gradient(W), vfd.gradient(W), rtol=1e-6, atol=1e-7)
    assert np.allclose(v.hessian(W), vfd.hessian(W), rtol=1e-5, atol=1e-4)


def test_field_without_callbacks_demotes_to_fd():
    u = ScalarField("blob", 1, lambda W: np.sin(W[:, 0]) * np.cos(W[:, 2]))
    assert u.strategy == "fd"
    W = seeded_points(count=4, seed=2)
    expect = np.stack([np.cos(W[:, 0]) * np.cos(W[:, 2]),
                       np.zeros(len(W)),
                       -np.sin(W[:, 0]) * np.sin(W[:, 2])], axis=1)
    assert np.allclose(u.gradient(W), expect, rtol=1e-6, atol=1e-8)
