import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmflow.errors import CoincidentPointsError, DomainError, UnsupportedPairError
from cmflow.geometry import (
    Euclidean,
    Frame,
    Hyperbolic,
    Warped2D,
    ct,
    distance,
    f_kappa,
    grad_rho,
    hessian_rho,
    laplacian_rho,
    minkowski,
    blossom_profile,
    sectional_curvature,
    sinh_profile,
    space_from_json,
)

coords = st.lists(st.floats(-2.0, 2.0), min_size=3, max_size=3)


def _h2_point(y):
    H = Hyperbolic(2)
    return H.from_chart(H.origin(), np.asarray(y, dtype=float))


# -- comparison functions ----------------------------------------------------------------

def test_comparison_function_limits():
    r = np.array([0.1, 1.0, 3.0])
    np.testing.assert_allclose(ct(1e-7, r), 1.0 / r, rtol=1e-10)
    np.testing.assert_allclose(f_kappa(1e-6, r), 0.5 * r * r, rtol=1e-10)
    assert ct(1.0, 1.0) == pytest.approx(1.313035, abs=1e-6)
    assert f_kappa(2.0, 1.0) == pytest.approx((math.cosh(2.0) - 1) / 4, rel=1e-14)


# -- distances ---------------------------------------------------------------------------------

def test_documented_distances():
    assert distance(Euclidean(2), np.zeros(2), np.array([3.0, 4.0])) == pytest.approx(5.0)
    H = Hyperbolic(2)
    x = np.array([math.cosh(1), math.sinh(1), 0.0])
    assert distance(H, H.origin(), x) == pytest.approx(1.0, abs=1e-14)
    W = Warped2D(blossom_profile())
    assert distance(W, W.origin(), np.array([2.0, 0.7])) == 2.0


def _mp_hyperboloid_point(a, k0):
    r = mp.sqrt(sum(mp.mpf(c) ** 2 for c in a))
    radial = mp.sinh(k0 * r) / (k0 * r) if r > 0 else mp.mpf(1)
    return [mp.cosh(k0 * r) / k0] + [radial * c for c in a]


@given(a=st.lists(st.floats(-2, 2), min_size=2, max_size=2), b=st.lists(st.floats(-2, 2), min_size=2, max_size=2),
       k0=st.sampled_from([0.5, 1.0, 2.0]))
def test_hyperbolic_distance_matches_arccosh(a, b, k0):
    # oracle: exact hyperboloid points from the chart, arccosh at high precision
    H = Hyperbolic(2, k0)
    x, y = H.from_chart(H.origin(), np.array(a)), H.from_chart(H.origin(), np.array(b))
    mp.mp.dps = 50
    X, Y = _mp_hyperboloid_point(a, k0), _mp_hyperboloid_point(b, k0)
    inner = -X[0] * Y[0] + X[1] * Y[1] + X[2] * Y[2]
    expect = float(mp.acosh(max(mp.mpf(1), -k0 * k0 * inner)) / k0)
    size = k0 * max(np.max(np.abs(x)), np.max(np.abs(y)))
    assert distance(H, x, y) == pytest.approx(expect, rel=1e-12, abs=1e-14 * size**2 / k0)


def test_warped_distance_needs_the_pole():
    W = Warped2D(blossom_profile())
    with pytest.raises(UnsupportedPairError):
        distance(W, np.array([1.0, 0.0]), np.array([2.0, 1.0]))


# -- derivatives of the distance ------------------------------------------------------------------

def test_documented_laplacians_and_hessians():
    H = Hyperbolic(2)
    x = np.array([math.cosh(1), math.sinh(1), 0.0])
    assert laplacian_rho(H, H.origin(), x) == pytest.approx(1.313035, abs=1e-6)
    assert laplacian_rho(Euclidean(3), np.zeros(3), np.array([0.0, 2.0, 0.0])) == pytest.approx(1.0)
    W = Warped2D(blossom_profile())
    assert laplacian_rho(W, W.origin(), np.array([1.0, 0.3])) == pytest.approx(2.0)
    g = grad_rho(H, H.origin(), x)
    assert hessian_rho(H, H.origin(), x, g) == pytest.approx(0.0, abs=1e-14)
    assert hessian_rho(H, H.origin(), x, np.array([0, 0, 1.0])) == pytest.approx(1.313035, abs=1e-6)
    E = Euclidean(3)
    assert hessian_rho(E, np.zeros(3), np.array([2.0, 0, 0]), np.array([0, 1.0, 0])) == pytest.approx(0.5)


def test_documented_curvatures():
    assert sectional_curvature(Hyperbolic(3, 2.0), Hyperbolic(3, 2.0).origin()) == pytest.approx(-4.0)
    assert sectional_curvature(Warped2D(blossom_profile()), np.array([1.0, 0.0])) == pytest.approx(-6.0)
    assert sectional_curvature(Euclidean(2), np.zeros(2)) == 0.0


def test_documented_gradient():
    H = Hyperbolic(2)
    x = np.array([math.cosh(1), math.sinh(1), 0.0])
    g = grad_rho(H, H.origin(), x)
    np.testing.assert_allclose(g, [math.sinh(1), math.cosh(1), 0.0], atol=1e-14)
    assert minkowski(g, g) == pytest.approx(1.0)
    assert minkowski(g, x) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("space", [Euclidean(3), Hyperbolic(3, 1.0), Hyperbolic(3, 0.5), Hyperbolic(2, 2.0)])
@given(a=coords, b=coords, v=coords)
def test_distance_derivatives_match_finite_differences(space, a, b, v):
    m = space.dim
    x0 = space.from_chart(space.origin(), np.array(a[:m]))
    x = space.from_chart(space.origin(), np.array(b[:m]))
    if space.distance(x0, x) < 0.2:
        return
    basis = space.tangent_basis(x)
    u = np.array(v[:m]) @ basis
    if space.norm(x, u) < 1e-3:
        return
    u = u / space.norm(x, u)
    h = 1e-4
    f = [float(space.distance(x0, space.exp(x, s * u))) for s in (-h, 0.0, h)]
    d1 = (f[2] - f[0]) / (2 * h)
    d2 = (f[2] - 2 * f[1] + f[0]) / (h * h)
    assert space.inner(x, grad_rho(space, x0, x), u) == pytest.approx(d1, abs=1e-7)
    assert hessian_rho(space, x0, x, u) == pytest.approx(d2, abs=2e-5)
    trace = sum(float(hessian_rho(space, x0, x, e)) for e in basis)
    assert laplacian_rho(space, x0, x) == pytest.approx(trace, rel=1e-10)


def test_warped_sinh_profile_matches_hyperbolic_plane():
    W = Warped2D(sinh_profile(1.0))
    H = Hyperbolic(2)
    r = 1.7
    x = np.array([r, 0.4])
    hx = H.from_chart(H.origin(), [r, 0.0])
    assert laplacian_rho(W, W.origin(), x) == pytest.approx(float(laplacian_rho(H, H.origin(), hx)))
    # unit angular direction has length phi(r) * dtheta
    v = np.array([0.0, 1.0 / math.sinh(r)])
    assert hessian_rho(W, W.origin(), x, v) == pytest.approx(1 / math.tanh(r), rel=1e-13)
    assert sectional_curvature(W, x) == pytest.approx(-1.0)


def test_coincident_points_raise():
    H = Hyperbolic(2)
    with pytest.raises(CoincidentPointsError):
        laplacian_rho(H, H.origin(), H.origin())
    with pytest.raises(CoincidentPointsError):
        grad_rho(Euclidean(2), np.zeros(2), np.zeros(2))


# -- exponential map and charts ----------------------------------------------------------------------

@pytest.mark.parametrize("space", [Euclidean(2), Hyperbolic(2), Hyperbolic(3, 2.0), Hyperbolic(3, 0.5)])
@given(a=coords, b=coords)
def test_exp_log_roundtrip(space, a, b):
    # sample in units of the curvature scale; hyperboloid coordinates grow like
    # exp(kappa0 * rho), so the achievable accuracy scales with (kappa0 |x|)^2
    m = space.dim
    k = getattr(space, "kappa0", 0.0) or 1.0
    x = space.from_chart(space.origin(), np.array(a[:m]) / k)
    y = space.from_chart(space.origin(), np.array(b[:m]) / k)
    u = space.log(x, y)
    size = k * max(np.max(np.abs(x)), np.max(np.abs(y)), 1.0 / k)
    np.testing.assert_allclose(space.exp(x, u), y, atol=1e-12 * size**2 / k)
    assert space.norm(x, u) == pytest.approx(float(space.distance(x, y)), abs=1e-12 * size**2 / k)


@pytest.mark.parametrize("space", [Hyperbolic(2), Hyperbolic(3, 0.5)])
def test_points_stay_on_the_hyperboloid(space):
    rng = np.random.default_rng(3)
    pts = space.from_chart(space.origin(), rng.normal(size=(50, space.dim)) * 3)
    space.check_point(pts)
    basis = space.tangent_basis(pts[7])
    Frame(pts[7], basis[:1], basis[1:]).check(space)
    with pytest.raises(DomainError):
        space.check_point(np.array([3.0] + [0.0] * space.dim))


def test_chart_roundtrip_and_mean_point():
    H = Hyperbolic(2)
    y = np.array([0.3, -1.1])
    x = H.from_chart(H.origin(), y)
    np.testing.assert_allclose(H.to_chart(H.origin(), x), y, atol=1e-12)
    pts = H.from_chart(H.origin(), np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]))
    np.testing.assert_allclose(H.mean_point(pts), H.origin(), atol=1e-12)


def test_space_json_roundtrip():
    for space in (Euclidean(3), Hyperbolic(2, 0.5), Warped2D(blossom_profile()), Warped2D(sinh_profile(2.0))):
        assert space_from_json(space.to_json()) == space
    with pytest.raises(DomainError):
        space_from_json({"variant": "spherical"})


def test_warped_profile_validation():
    from cmflow.geometry import WarpingProfile
    bad = WarpingProfile("sin", np.sin, np.cos, lambda r: -np.sin(r))
    with pytest.raises(DomainError):
        Warped2D(bad)
