import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmflow.errors import DegenerateGeometryError, DomainError, UnsupportedPairError
from cmflow.geometry import Euclidean, Hyperbolic, Warped2D, blossom_profile
from cmflow.io import load_submanifold, save_submanifold, submanifold_from_json, submanifold_to_json
from cmflow.kernel import BackwardsKernel, KernelEvaluator
from cmflow.shapes import builtin, dumbbell_profile, ellipse, geodesic_segment, space_by_name, sphere_profile
from cmflow.submanifold import (
    GeodesicSphere,
    PolylineCurve,
    RevolutionSurface,
    UnionSubmanifold,
    integrate_kernel,
    mean_curvature,
    sample,
    volume_in_ball,
)


def _circle_polyline(space, radius, count):
    th = 2 * np.pi * np.arange(count) / count
    coords = radius * np.c_[np.cos(th), np.sin(th)]
    if isinstance(space, Euclidean):
        return PolylineCurve(space, coords)
    return PolylineCurve(space, space.from_chart(space.origin(), coords))


def _norms(space, x, v):
    return np.sqrt(space.inner(x, v, v))


# -- total weights -------------------------------------------------------------------------

@pytest.mark.parametrize("resolution", [8, 17, 64, 513])
def test_unit_circle_weight_is_exact(resolution):
    assert sample(GeodesicSphere(Euclidean(2), 1.0), resolution).total_weight == pytest.approx(2 * math.pi, abs=1e-9)


def test_hyperbolic_sphere_area():
    # closed form 4 pi sinh^2(1) = 17.35539
    w = sample(GeodesicSphere(Hyperbolic(3), 1.0), 64).total_weight
    assert w == pytest.approx(4 * math.pi * math.sinh(1) ** 2, rel=1e-12)
    assert w == pytest.approx(17.3554, abs=1e-4)


def test_warped_circle_circumference():
    # 2 pi phi(1) = 2 pi e^{1/4} = 8.06777
    w = sample(GeodesicSphere(Warped2D(blossom_profile()), 1.0), 32).total_weight
    assert w == pytest.approx(2 * math.pi * math.exp(0.25), rel=1e-13)
    assert w == pytest.approx(8.0678, abs=1e-4)


def test_sample_resolution_and_segment_validation():
    with pytest.raises(DomainError):
        sample(GeodesicSphere(Euclidean(2), 1.0), 7)
    with pytest.raises(DegenerateGeometryError):
        PolylineCurve(Euclidean(2), [[0, 0], [1, 0], [1, 1e-12 * 0], [0, 1]])
    with pytest.raises(DomainError):
        GeodesicSphere(Euclidean(2), 0.0)


# -- mean curvature ------------------------------------------------------------------------------

def test_sphere_mean_curvature_examples():
    E3 = Euclidean(3)
    S = GeodesicSphere(E3, 2.0)
    s = S.sample(16)
    h = mean_curvature(S, 3, 16)
    assert np.linalg.norm(h) == pytest.approx(1.0)
    assert np.dot(h, s.points[3]) < 0  # inward
    H2 = Hyperbolic(2)
    s = sample(GeodesicSphere(H2, 1.0), 16)
    np.testing.assert_allclose(_norms(H2, s.points, s.mean_curvature), 1 / math.tanh(1), rtol=1e-12)
    W = Warped2D(blossom_profile())
    assert np.linalg.norm(mean_curvature(GeodesicSphere(W, 1.0), 0, 16)) == pytest.approx(2.0)


@pytest.mark.parametrize("space", [Euclidean(2), Hyperbolic(2), Hyperbolic(2, 0.5)])
def test_polyline_curvature_converges_at_second_order(space):
    exact = float(space.sphere_mean_curvature(1, 1.0))
    errs = []
    for count in (32, 64, 128):
        C = _circle_polyline(space, 1.0, count)
        h = C.curvature_vectors()
        errs.append(float(np.max(np.abs(_norms(space, C.vertices, h) - exact))))
    if isinstance(space, Euclidean):
        # regular Euclidean polygons reproduce 1/R exactly
        assert max(errs) < 1e-12
        return
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.9), rates


@pytest.mark.parametrize("S", [
    GeodesicSphere(Hyperbolic(3), 0.7),
    ellipse(Hyperbolic(2), 1.0, 0.6, 64),
    ellipse(Euclidean(2), 1.0, 0.6, 64),
    sphere_profile(Euclidean(3), 1.0, 33),
])
def test_mean_curvature_lies_in_the_normal_span(S):
    s = S.sample(32)
    h = s.mean_curvature
    proj = np.zeros_like(h)
    for i in range(s.normals.shape[1]):
        e = s.normals[:, i, :]
        proj += S.space.inner(s.points, h, e)[:, None] * e
    finite = np.all(np.isfinite(h), axis=1)
    np.testing.assert_allclose(proj[finite], h[finite], atol=1e-8)
    assert np.all(s.weights > 0) or S.variant == "revolution"


# -- kernel integrals -------------------------------------------------------------------------------

def test_integrate_kernel_unit_circle_closed_form():
    E2 = Euclidean(2)
    bk = BackwardsKernel(KernelEvaluator(1, 0.0), 0.5, np.zeros(2), E2)
    value = integrate_kernel(GeodesicSphere(E2, 1.0), bk, 0.0, 64)
    assert value == pytest.approx(math.sqrt(2 * math.pi) * math.exp(-0.5), rel=1e-12)
    assert value == pytest.approx(1.520347, abs=1e-6)


def test_integrate_kernel_domain_errors():
    E2 = Euclidean(2)
    bk = BackwardsKernel(KernelEvaluator(1, 0.0), 0.5, np.zeros(2), E2)
    with pytest.raises(DomainError):
        integrate_kernel(GeodesicSphere(E2, 1.0), bk, 0.5)
    bk2 = BackwardsKernel(KernelEvaluator(2, 0.0), 0.5, np.zeros(2), E2)
    with pytest.raises(DomainError):
        integrate_kernel(GeodesicSphere(E2, 1.0), bk2, 0.0)


def test_polygon_integral_converges_at_second_order():
    E2 = Euclidean(2)
    exact = math.sqrt(2 * math.pi) * math.exp(-0.5)
    bk = BackwardsKernel(KernelEvaluator(1, 0.0), 0.5, np.array([0.3, 0.1]), E2)
    exact = integrate_kernel(GeodesicSphere(E2, 1.0), bk, 0.0, 256)
    errs = [abs(integrate_kernel(_circle_polyline(E2, 1.0, q), bk, 0.0, 256) - exact) for q in (32, 64, 128)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.8), rates


def test_integral_tends_to_one_on_the_curve_and_zero_off_it():
    H2 = Hyperbolic(2)
    C = _circle_polyline(H2, 1.0, 256)
    x_on = C.vertices[5]
    x_off = H2.from_chart(H2.origin(), [0.2, 0.0])
    ev = KernelEvaluator(1, 1.0)
    on, off = [], []
    for tau in (1e-2, 1e-3, 1e-4):
        on.append(integrate_kernel(C, BackwardsKernel(ev, tau, x_on, H2), 0.0, 256))
        off.append(integrate_kernel(C, BackwardsKernel(ev, tau, x_off, H2), 0.0, 256))
    assert abs(on[-1] - 1) < abs(on[0] - 1)
    assert on[-1] == pytest.approx(1.0, abs=5e-3)
    assert off[-1] < 1e-100 and off[0] > off[1] > off[2]


def test_integral_decays_for_large_tau():
    H3 = Hyperbolic(3)
    S = GeodesicSphere(H3, 1.0)
    ev = KernelEvaluator(2, 1.0)
    vals = [integrate_kernel(S, BackwardsKernel(ev, tau, H3.origin(), H3), 0.0) for tau in (1, 10, 100)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-10


def test_sphere_radial_nodes_off_center_match_brute_force():
    # zonal quadrature against a dense vertex sum on the same sphere
    E3 = Euclidean(3)
    S = GeodesicSphere(E3, 1.0)
    x0 = np.array([0.0, 0.0, 0.4])
    ev = KernelEvaluator(2, 0.0)
    rho, w = S.radial_nodes(x0, math.sqrt(0.3), 128)
    zonal = float(np.sum(w * ev.k(0.3, rho)))
    u, v = np.polynomial.legendre.leggauss(400)
    phi = 2 * np.pi * np.arange(400) / 400
    z = u[:, None] * np.ones_like(phi)
    pts = np.stack([np.sqrt(1 - z**2) * np.cos(phi), np.sqrt(1 - z**2) * np.sin(phi), z], axis=-1)
    brute = float(np.sum(v[:, None] * (2 * np.pi / 400) * ev.k(0.3, np.linalg.norm(pts - x0, axis=-1))))
    assert zonal == pytest.approx(brute, rel=1e-10)


# -- volume in balls ---------------------------------------------------------------------------------

def test_volume_in_ball_examples():
    E2 = Euclidean(2)
    S = GeodesicSphere(E2, 1.0)
    assert volume_in_ball(S, np.zeros(2), 1 + 1e-9) == pytest.approx(2 * math.pi)
    assert volume_in_ball(S, np.zeros(2), 0.0) == 0.0
    C = ellipse(Hyperbolic(2), 1.0, 0.5, 64)
    assert volume_in_ball(C, Hyperbolic(2).origin(), 50.0) == pytest.approx(C.area())


@given(R=st.floats(0.0, 4.0), a=st.floats(-1.5, 1.5))
def test_volume_in_ball_is_monotone_in_radius(R, a):
    H2 = Hyperbolic(2)
    C = ellipse(H2, 1.0, 0.5, 64)
    x1 = H2.from_chart(H2.origin(), [a, 0.0])
    assert volume_in_ball(C, x1, R) <= volume_in_ball(C, x1, R + 0.3) + 1e-12


# -- polylines ------------------------------------------------------------------------------------

def test_polyline_resampling_and_self_intersection():
    E2 = Euclidean(2)
    th = np.sort(np.random.default_rng(1).uniform(0, 2 * np.pi, 40))
    C = PolylineCurve(E2, np.c_[np.cos(th), np.sin(th)])
    R = C.resampled()
    lengths = R.segment_lengths()
    assert lengths.max() / lengths.min() < 1.05
    # new vertices lie on the old polyline, so corners are cut
    assert R.area() <= C.area() + 1e-12
    assert R.area() == pytest.approx(C.area(), rel=2e-2)
    bowtie = PolylineCurve(E2, [[0, 0], [1, 1], [1, 0], [0, 1]])
    assert bowtie.self_intersects()
    assert not C.self_intersects()
    H2 = Hyperbolic(2)
    assert not ellipse(H2, 1.0, 0.5, 32).self_intersects()


def test_polyline_refined_resolution_changes_the_quadrature():
    C = ellipse(Hyperbolic(2), 1.0, 0.5, 128)
    x0 = C.vertices[0]
    r1 = C.radial_nodes(x0, 0.2, 256)
    r2 = C.radial_nodes(x0, 0.2, C.refined_resolution(256))
    assert len(r2[0]) > len(r1[0])


def test_warped_polylines_and_off_pole_spheres_are_rejected():
    W = Warped2D(blossom_profile())
    with pytest.raises(UnsupportedPairError):
        PolylineCurve(W, [[1, 0], [1, 1], [1, 2]])
    with pytest.raises(UnsupportedPairError):
        GeodesicSphere(W, 1.0, center=np.array([1.0, 0.0]))


# -- surfaces of revolution ------------------------------------------------------------------------

@pytest.mark.parametrize("space", [Euclidean(3), Hyperbolic(3)])
def test_revolution_sphere_area_converges(space):
    exact = float(space.sphere_area(2, 1.0))
    errs = [abs(sphere_profile(space, 1.0, c).area() - exact) for c in (33, 65, 129)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.9), rates


@pytest.mark.parametrize("space", [Euclidean(3), Hyperbolic(3)])
def test_revolution_sphere_mean_curvature(space):
    S = sphere_profile(space, 1.0, 129)
    h = S.curvature_vectors()
    mags = _norms(S.slice_space, S.profile.vertices, h)
    exact = float(space.sphere_mean_curvature(2, 1.0))
    np.testing.assert_allclose(mags, exact, rtol=2e-3)


def test_revolution_kernel_integral_matches_exact_sphere():
    H3 = Hyperbolic(3)
    ev = KernelEvaluator(2, 1.0)
    exact = integrate_kernel(GeodesicSphere(H3, 1.0), BackwardsKernel(ev, 0.4, H3.origin(), H3), 0.0)
    for x0 in (H3.origin(), H3.from_chart(H3.origin(), [0.3, 0.2, 0.0])):
        bk = BackwardsKernel(ev, 0.4, x0, H3)
        ref = integrate_kernel(GeodesicSphere(H3, 1.0), bk, 0.0, 256)
        approx = integrate_kernel(sphere_profile(H3, 1.0, 129), bk, 0.0, 256)
        assert approx == pytest.approx(ref, rel=2e-3)
    assert exact > 0


def test_revolution_profile_validation():
    E3 = Euclidean(3)
    with pytest.raises(DomainError):
        RevolutionSurface(E3, [[0, 1, 0.5], [1, 0, 0], [0, -1, 0]])
    with pytest.raises(DomainError):
        RevolutionSurface(E3, [[0, 1, 0], [-1, 0, 0], [0, -1, 0]])
    with pytest.raises(DomainError):
        RevolutionSurface(Euclidean(2), [[0, 1], [1, 0], [0, -1]])


# -- unions ---------------------------------------------------------------------------------------

def test_union_adds_areas_and_integrals():
    H2 = Hyperbolic(2)
    a = GeodesicSphere(H2, 0.5)
    far = H2.from_chart(H2.origin(), [4.0, 0.0])
    b = GeodesicSphere(H2, 0.5, far)
    U = UnionSubmanifold([a, b])
    assert U.area() == pytest.approx(a.area() + b.area())
    bk = BackwardsKernel(KernelEvaluator(1, 1.0), 0.3, H2.origin(), H2)
    assert integrate_kernel(U, bk, 0.0) == pytest.approx(integrate_kernel(a, bk, 0.0) + integrate_kernel(b, bk, 0.0))
    with pytest.raises(DomainError):
        UnionSubmanifold([a, GeodesicSphere(Hyperbolic(3), 1.0)])


# -- serialization and the shape library ------------------------------------------------------------

@pytest.mark.parametrize("S", [
    GeodesicSphere(Hyperbolic(3, 0.5), 1.2),
    GeodesicSphere(Warped2D(blossom_profile()), 1.0),
    ellipse(Hyperbolic(2), 1.0, 0.5, 16),
    geodesic_segment(Euclidean(2), 2.0, 11),
    sphere_profile(Hyperbolic(3), 1.0, 17),
    UnionSubmanifold([GeodesicSphere(Euclidean(2), 1.0), ellipse(Euclidean(2), 0.3, 0.2, 12)]),
])
def test_json_roundtrip(S, tmp_path):
    doc = submanifold_to_json(S)
    assert doc["schema"] == "cmflow-sub-v1"
    back = submanifold_from_json(doc)
    assert back.to_json() == S.to_json()
    path = tmp_path / "s.json"
    save_submanifold(S, path)
    assert load_submanifold(path).area() == pytest.approx(S.area(), rel=1e-14)


def test_json_rejects_bad_documents():
    with pytest.raises(DomainError):
        submanifold_from_json({"schema": "other"})
    with pytest.raises(DomainError):
        submanifold_from_json({"variant": "sphere", "space": {"variant": "euclidean", "dim": 2}})
    with pytest.raises(DomainError):
        submanifold_from_json({"variant": "torus"})


def test_builtin_shapes():
    assert builtin("circle").area() == pytest.approx(2 * math.pi)
    assert builtin("sphere", "H3", radius=0.5).space == Hyperbolic(3)
    assert builtin("ellipse", a=1.0, b=0.5, count=32).space == Hyperbolic(2)
    seg = builtin("segment", "H2", half_length=1.0, count=11)
    assert seg.area() == pytest.approx(2.0, rel=1e-12)
    assert isinstance(dumbbell_profile(Euclidean(3)), RevolutionSurface)
    assert space_by_name("H3:0.5") == Hyperbolic(3, 0.5)
    with pytest.raises(DomainError):
        builtin("torus")
    with pytest.raises(DomainError):
        builtin("circle", radius_typo=1.0)
    with pytest.raises(DomainError):
        space_by_name("S2")
