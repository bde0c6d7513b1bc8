import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from cmflow.errors import DomainError, UnsupportedDimensionError
from cmflow.geometry import Euclidean, Hyperbolic
from cmflow.kernel import (
    BackwardsKernel,
    KernelEvaluator,
    QuadraturePolicy,
    descent_integral,
    dm_bound_ratio,
    eval_dlog_k,
    eval_k,
    eval_log_k,
    eval_phi,
    millison_raise,
    normalization_integral,
    sphere_area,
    sphere_entropy,
    superconvexity_defect,
)

# even-dimensional values from mpmath (30 digits) applied to the classical
# integral formula for the hyperbolic-plane heat kernel, and its Millison raise
K2_ORACLE = {(1.0, 1.0): 0.04149118395782221757, (0.5, 0.25): 0.13024119066005515817,
             (4.0, 3.0): 0.0019040302207903061284, (0.25, 0.5): 0.22363030933026710005,
             (1.0, 0.0): 0.057535755205721974619}
K4_ORACLE = {(1.0, 1.0): 0.00049391864528730385057, (0.5, 2.0): 0.00049942791890713815529}


# -- symbolic closed forms -----------------------------------------------------------------

_t, _r = sp.symbols("t r", positive=True)
_K1 = (4 * sp.pi * _t) ** sp.Rational(-1, 2) * sp.exp(-_r ** 2 / (4 * _t))
_K3 = (4 * sp.pi * _t) ** sp.Rational(-3, 2) * sp.exp(-_t) * _r / sp.sinh(_r) * sp.exp(-_r ** 2 / (4 * _t))


def _raise(expr, n):
    return sp.simplify(-sp.exp(-n * _t) / (2 * sp.pi * sp.sinh(_r)) * sp.diff(expr, _r))


_K5 = _raise(_K3, 3)


def _num(expr, t, r):
    return float(expr.subs({_t: t, _r: r}).evalf(30))


def test_symbolic_raise_of_k1_is_k3():
    assert sp.simplify(_raise(_K1, 1) - _K3) == 0


@pytest.mark.parametrize("t,r", [(1.0, 0.5), (0.25, 2.0), (4.0, 3.0), (0.1, 0.01)])
def test_odd_kernels_match_closed_forms(t, r):
    assert eval_k(KernelEvaluator(1, 1.0), t, r) == pytest.approx(_num(_K1, t, r), rel=1e-14)
    assert eval_k(KernelEvaluator(3, 1.0), t, r) == pytest.approx(_num(_K3, t, r), rel=1e-12)
    assert eval_k(KernelEvaluator(5, 1.0), t, r) == pytest.approx(_num(_K5, t, r), rel=1e-11)


@pytest.mark.parametrize("key", sorted(K2_ORACLE))
def test_two_dimensional_kernel_matches_integral_oracle(key):
    t, r = key
    assert eval_k(KernelEvaluator(2, 1.0), t, r) == pytest.approx(K2_ORACLE[key], rel=1e-12)


@pytest.mark.parametrize("key", sorted(K4_ORACLE))
def test_four_dimensional_kernel_matches_raised_oracle(key):
    t, r = key
    assert eval_k(KernelEvaluator(4, 1.0), t, r) == pytest.approx(K4_ORACLE[key], rel=1e-12)


def test_documented_values():
    assert eval_k(KernelEvaluator(1, 0.0), 1.0, 0.0) == pytest.approx(0.2820948, abs=1e-7)
    assert eval_k(KernelEvaluator(3, 1.0), 1.0, 0.0) == pytest.approx(0.0082584, abs=1e-7)
    k31 = eval_k(KernelEvaluator(3, 1.0), 1.0, 1.0)
    assert eval_k(KernelEvaluator(3, 2.0), 0.25, 0.5) == pytest.approx(8 * k31, rel=1e-13)
    assert 8 * k31 == pytest.approx(8 * _num(_K3, 1.0, 1.0), rel=1e-13)
    assert 8 * k31 == pytest.approx(0.0437819, abs=1e-7)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
@pytest.mark.parametrize("kappa", [0.5, 2.0])
def test_scaling_identity(n, kappa):
    unit = KernelEvaluator(n, 1.0)
    ev = KernelEvaluator(n, kappa)
    t, r = np.array([0.3, 1.0, 2.5]), np.array([0.0, 0.7, 4.0])
    expect = n * math.log(kappa) + unit.log_k(kappa ** 2 * t, kappa * r)
    np.testing.assert_allclose(ev.log_k(t, r), expect, rtol=0, atol=1e-11)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_flat_limit_is_gaussian(n):
    t, r = 0.7, 1.3
    gauss = (4 * math.pi * t) ** (-n / 2) * math.exp(-r * r / (4 * t))
    assert eval_k(KernelEvaluator(n, 0.0), t, r) == pytest.approx(gauss, rel=1e-14)
    assert eval_k(KernelEvaluator(n, 1e-4), t, r) == pytest.approx(gauss, rel=1e-6)


def test_log_k_handles_far_tails():
    ev = KernelEvaluator(3, 1.0)
    assert np.isfinite(eval_log_k(ev, 1.0, 200.0))
    assert eval_k(ev, 1.0, 200.0) == 0.0


# -- derivatives -------------------------------------------------------------------------

def test_dlog_documented_values():
    assert eval_dlog_k(KernelEvaluator(1, 0.0), 1.0, 2.0) == pytest.approx((-1.0, -0.5), abs=1e-14)
    first, second = eval_dlog_k(KernelEvaluator(3, 1.0), 1.0, 1.0)
    r = 1.0
    closed = (1 / r - 1 / math.tanh(r) - r / 2, -1 / r ** 2 + 1 / math.sinh(r) ** 2 - 0.5)
    assert (first, second) == pytest.approx(closed, abs=1e-12)
    assert (first, second) == pytest.approx((-0.813035, -0.775938), abs=1e-6)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
@pytest.mark.parametrize("t,r", [(1.0, 1.0), (0.3, 0.2), (5.0, 4.0)])
def test_dlog_matches_finite_differences(n, t, r):
    ev = KernelEvaluator(n, 1.0)
    h = 1e-3
    f = [float(ev.log_k(t, r + j * h)) for j in (-2, -1, 0, 1, 2)]
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    first, second = eval_dlog_k(ev, t, r)
    assert first == pytest.approx(d1, rel=1e-7, abs=1e-9)
    assert second == pytest.approx(d2, rel=1e-5, abs=1e-6)
    if n == 2 and (t, r) == (1.0, 1.0):
        assert first <= 0


def test_defect_closed_forms():
    assert superconvexity_defect(KernelEvaluator(1, 1.0), 1.0, 1.0) == pytest.approx(0.156518, abs=1e-6)
    assert superconvexity_defect(KernelEvaluator(1, 1.0), 1.0, 1.0) == pytest.approx(
        (1 / math.tanh(1) - 1) / 2, rel=1e-13)
    assert superconvexity_defect(KernelEvaluator(3, 1.0), 0.5, 2.0) > 0
    r = np.linspace(0.01, 10, 50)
    assert np.all(superconvexity_defect(KernelEvaluator(1, 0.0), 2.0, r) == 0.0)


@given(n=st.integers(1, 6), kappa=st.floats(0.0, 2.0), t=st.floats(0.01, 20.0), r=st.floats(1e-3, 15.0))
def test_defect_nonnegative(n, kappa, t, r):
    assert superconvexity_defect(KernelEvaluator(n, kappa), t, r) >= -1e-8


@given(n=st.integers(2, 6), k1=st.floats(0.0, 2.0), k2=st.floats(0.0, 2.0), t=st.floats(0.01, 20.0),
       r=st.floats(0.0, 15.0))
def test_larger_curvature_gives_smaller_kernel(n, k1, k2, t, r):
    lo, hi = sorted((k1, k2))
    if hi - lo < 1e-3:
        return
    assert eval_log_k(KernelEvaluator(n, hi), t, r) < eval_log_k(KernelEvaluator(n, lo), t, r)


@given(k1=st.floats(0.0, 2.0), k2=st.floats(0.0, 2.0), t=st.floats(0.01, 20.0), r=st.floats(0.0, 15.0))
def test_one_dimensional_kernel_ignores_curvature(k1, k2, t, r):
    a = eval_log_k(KernelEvaluator(1, k1), t, r)
    b = eval_log_k(KernelEvaluator(1, k2), t, r)
    assert abs(a - b) <= 1e-12


@given(n=st.integers(1, 6), t=st.floats(0.05, 10.0), r=st.floats(0.0, 10.0))
def test_kernel_decreases_in_distance(n, t, r):
    ev = KernelEvaluator(n, 1.0)
    assert eval_log_k(ev, t, r + 0.1) < eval_log_k(ev, t, r)


# -- recurrences ------------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("kappa", [0.0, 0.5, 1.0, 2.0])
def test_millison_raise(n, kappa):
    t = np.array([0.25, 1.0, 4.0, 0.25])
    r = np.array([0.1, 1.0, 3.0, 0.5])
    raised = millison_raise(KernelEvaluator(n, kappa), t, r)
    np.testing.assert_allclose(raised, KernelEvaluator(n + 2, kappa).k(t, r), rtol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("t,r", [(0.25, 0.0), (1.0, 0.5), (4.0, 3.0)])
def test_descent_recovers_lower_kernel(n, t, r):
    value = descent_integral(KernelEvaluator(n + 1, 1.0), t, r)
    assert value == pytest.approx(eval_k(KernelEvaluator(n, 1.0), t, r), rel=1e-7)


def test_descent_with_unit_constant_is_off_by_sqrt2():
    value = descent_integral(KernelEvaluator(2, 1.0), 1.0, 0.5, constant=1.0)
    assert value * math.sqrt(2) == pytest.approx(eval_k(KernelEvaluator(1, 1.0), 1.0, 0.5), rel=1e-8)


def test_descent_requires_unit_curvature():
    with pytest.raises(DomainError):
        descent_integral(KernelEvaluator(2, 0.5), 1.0, 1.0)


# -- normalization and bounds ------------------------------------------------------------------

@pytest.mark.parametrize("n,kappa,t", [(1, 0.0, 1.0), (3, 1.0, 1.0), (2, 1.0, 0.5), (4, 2.0, 0.1),
                                       (5, 1.0, 10.0), (6, 0.5, 2.0)])
def test_normalization(n, kappa, t):
    assert normalization_integral(KernelEvaluator(n, kappa), t) == pytest.approx(1.0, abs=1e-7)


def test_decay_ratio_values():
    ev = KernelEvaluator(3, 1.0)
    assert dm_bound_ratio(ev, 1.0, 0.0) == pytest.approx(0.0082584 / math.exp(-1), abs=1e-5)
    assert dm_bound_ratio(ev, 1.0, 0.0) == pytest.approx(0.022449, abs=1e-6)
    a, b = dm_bound_ratio(ev, 1.0, 0.0), dm_bound_ratio(ev, 1.0, 5.0)
    assert 0.1 < b / a < 10
    t, r = np.meshgrid(np.geomspace(0.01, 20, 20), np.linspace(0, 15, 20))
    ratio = dm_bound_ratio(KernelEvaluator(2, 1.0), t.ravel(), r.ravel())
    assert np.all(ratio > 0) and np.all(np.isfinite(ratio))
    assert ratio.max() / ratio.min() < 1e3
    with pytest.raises(DomainError):
        dm_bound_ratio(KernelEvaluator(3, 0.5), 1.0, 1.0)


def test_sphere_constants():
    assert sphere_area(1) == pytest.approx(2 * math.pi)
    assert sphere_area(2) == pytest.approx(4 * math.pi)
    assert sphere_entropy(1) == pytest.approx(math.sqrt(2 * math.pi / math.e), rel=1e-14)
    assert sphere_entropy(2) == pytest.approx(4 / math.e, rel=1e-14)


# -- backwards kernels ----------------------------------------------------------------------------

def test_backwards_kernel_values():
    E = Euclidean(2)
    bk = BackwardsKernel(KernelEvaluator(1, 0.0), 0.0, np.zeros(2), E)
    assert eval_phi(bk, -1.0, np.zeros(2)) == pytest.approx(0.2820948, abs=1e-7)
    bk = BackwardsKernel(KernelEvaluator(1, 0.0), 1.0, np.zeros(2), E)
    assert eval_phi(bk, 0.0, np.array([2.0, 0.0])) == pytest.approx(0.103777, abs=1e-6)
    assert eval_phi(bk, 0.0, np.array([0.0, -2.0])) == eval_phi(bk, 0.0, np.array([2.0, 0.0]))
    with pytest.raises(DomainError):
        eval_phi(bk, 1.0, np.zeros(2))


def test_backwards_kernel_is_radial_in_hyperbolic_space():
    H = Hyperbolic(3)
    bk = BackwardsKernel(KernelEvaluator(3, 1.0), 1.0, H.origin(), H)
    pts = H.from_chart(H.origin(), np.array([[1.2, 0, 0], [0, 0, -1.2], [0, 1.2, 0]]))
    vals = eval_phi(bk, 0.5, pts)
    np.testing.assert_allclose(vals, vals[0], rtol=1e-13)


# -- errors and caching ----------------------------------------------------------------------------

def test_argument_errors():
    with pytest.raises(UnsupportedDimensionError):
        KernelEvaluator(7, 1.0)
    with pytest.raises(DomainError):
        KernelEvaluator(2, -1.0)
    ev = KernelEvaluator(3, 1.0)
    with pytest.raises(DomainError):
        eval_k(ev, 0.0, 1.0)
    with pytest.raises(DomainError):
        eval_k(ev, 1.0, -1.0)


def test_quadrature_policy_refinement_agrees():
    coarse = KernelEvaluator(2, 1.0)
    fine = KernelEvaluator(2, 1.0, quad=QuadraturePolicy(nodes=48, panels=8))
    t, r = np.array([0.01, 1.0, 50.0]), np.array([0.05, 2.0, 10.0])
    np.testing.assert_allclose(coarse.k(t, r), fine.k(t, r), rtol=1e-11)


def test_lattice_cache_is_close_to_exact():
    exact = KernelEvaluator(2, 1.0)
    cached = KernelEvaluator(2, 1.0, cache=(1e-3, 1e-3))
    t = np.linspace(0.5, 1.5, 7)
    r = np.linspace(0.2, 3.0, 7)
    np.testing.assert_allclose(cached.k(t, r), exact.k(t, r), rtol=1e-6)
