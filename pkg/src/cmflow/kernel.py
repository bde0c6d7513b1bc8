"""Hyperbolic heat kernels K_n, their curvature rescalings K_{n,kappa}, and
the backwards kernels built from them.

``K_n(t, r)`` is the heat kernel of the hyperbolic space of constant curvature
-1 and dimension ``n`` as a function of time and geodesic distance.  For
``kappa > 0``

    K_{n,kappa}(t, r) = kappa**n * K_n(kappa**2 t, kappa r),

and ``K_{n,0}`` is the Euclidean Gaussian.  Odd dimensions are evaluated in
closed form, even dimensions through a desingularized descent integral (see
:mod:`cmflow._radial`).  All evaluation happens in log space.

Radial derivatives never use finite differences: the Millison step relates
``d/dr`` of ``K_n`` to ``K_{n+2}``, so first and second derivatives of
``log K`` come out of the same jets/quadrature as the value.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from . import _radial
from .errors import DomainError, QuadratureError, UnsupportedDimensionError

__all__ = [
    "QuadraturePolicy",
    "KernelEvaluator",
    "BackwardsKernel",
    "eval_k",
    "eval_log_k",
    "eval_dlog_k",
    "superconvexity_defect",
    "dm_bound_ratio",
    "eval_phi",
    "normalization_integral",
    "millison_raise",
    "descent_integral",
    "sphere_area",
    "sphere_entropy",
    "MAX_DIM",
]

MAX_DIM = 6
_FLAT_KAPPA = 1e-30
# beyond this unit-curvature distance sinh overflows; K underflows long before
_R_OVERFLOW = 700.0
_LOG_4PI = math.log(4.0 * math.pi)
_LOG_2PI = math.log(2.0 * math.pi)


def sphere_area(n: int) -> float:
    """Area of the unit ``n``-sphere in ``R^{n+1}``."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def sphere_entropy(n: int) -> float:
    """Euclidean entropy of the round ``n``-sphere, the shrinker value."""
    log_val = -0.5 * n * _LOG_4PI - 0.5 * n + 0.5 * n * math.log(2.0 * n)
    return math.exp(log_val) * sphere_area(n)


@dataclass(frozen=True)
class QuadraturePolicy:
    """Settings for the even-dimensional descent integral.

    ``nodes`` Gauss-Legendre points per panel and ``panels`` panels in the
    mapped variable.  ``rtol`` is the target for the adaptive integrals
    (normalization, forward descent check).  ``substitution`` names the
    endpoint desingularization; only ``"sqrt"`` (``v**2 = cosh s - cosh r``)
    is implemented.
    """

    nodes: int = 24
    panels: int = 4
    rtol: float = 1e-8
    substitution: str = "sqrt"

    def __post_init__(self):
        if self.substitution != "sqrt":
            raise ValueError(f"unknown substitution {self.substitution!r}")
        if self.nodes < 2 or self.panels < 1:
            raise ValueError("quadrature needs nodes >= 2 and panels >= 1")
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")


class _LatticeCache:
    """Thread-safe memo of scalar log-kernel values.

    With ``spacing=None`` keys are exact ``(t, r)`` pairs.  With a spacing
    ``(dlogt, dr)`` values are stored on a lattice and bilinearly
    interpolated in ``log K``.
    """

    def __init__(self, spacing=None):
        self.spacing = spacing
        self._store = {}
        self._lock = threading.Lock()

    def get(self, key, compute):
        with self._lock:
            hit = self._store.get(key)
        if hit is not None:
            return hit
        value = compute(*key)
        with self._lock:
            self._store[key] = value
        return value

    def __len__(self):
        with self._lock:
            return len(self._store)


class KernelEvaluator:
    """Evaluates ``K_{n,kappa}`` and radial derivatives of its logarithm.

    Parameters
    ----------
    n : int
        Kernel dimension, ``1 <= n <= 6``.
    kappa : float
        Curvature scale, ``kappa >= 0``.
    quad : QuadraturePolicy, optional
        Quadrature settings for even ``n``.
    cache : bool or tuple, optional
        ``True`` memoizes scalar evaluations exactly; a tuple
        ``(dlogt, dr)`` switches to an interpolated lattice.
    perturb : float, optional
        Multiplies every kernel value by ``1 + perturb * kappa``.  Only used
        to check that the property harness catches a wrong kernel.
    """

    def __init__(self, n: int, kappa: float = 0.0, quad: QuadraturePolicy | None = None,
                 cache=False, perturb: float = 0.0):
        if int(n) != n or not 1 <= n <= MAX_DIM:
            raise UnsupportedDimensionError(f"kernel dimension {n} outside 1..{MAX_DIM}")
        if not kappa >= 0:
            raise DomainError(f"kappa must be nonnegative, got {kappa}")
        self.n = int(n)
        self.kappa = float(kappa)
        # below this scale the curvature correction O(kappa^2 (t + r^2)) is
        # far beneath double precision, and kappa^2 products underflow
        self._flat = self.kappa < _FLAT_KAPPA
        self.quad = quad if quad is not None else QuadraturePolicy()
        self.perturb = float(perturb)
        if cache is True:
            self._cache = _LatticeCache()
        elif cache:
            self._cache = _LatticeCache(tuple(cache))
        else:
            self._cache = None

    def __repr__(self):
        return f"KernelEvaluator(n={self.n}, kappa={self.kappa})"

    def with_kappa(self, kappa: float) -> "KernelEvaluator":
        return KernelEvaluator(self.n, kappa, self.quad, perturb=self.perturb)

    # -- unit-curvature pieces ------------------------------------------------

    def _profiles(self, T, R, extra):
        """Power ``p`` of ``(4 pi T)^-p``, remaining log prefactor, profiles."""
        n = self.n
        if n % 2:
            m = (n - 1) // 2
            power = 0.5
            log_pre = -m * _LOG_2PI - m * m * T
            prof = _radial.odd_profile(R, T, m, extra)
        else:
            m = (n - 2) // 2
            power = 1.5
            log_pre = 0.5 * math.log(2.0) - 0.25 * T - m * _LOG_2PI - (m * m + m) * T
            prof = _radial.even_profile(R, T, m, extra, self.quad.nodes, self.quad.panels)
        return power, log_pre, prof

    # -- public evaluation -------------------------------------------------------

    def log_k(self, t, r):
        """``log K_{n,kappa}(t, r)``, vectorized over ``t`` and ``r``."""
        t, r, scalar = _check_tr(t, r)
        if scalar and self._cache is not None:
            return self._cached_log_k(float(t), float(r))
        return _maybe_scalar(self._log_k_array(t, r), scalar)

    def _log_k_array(self, t, r):
        n, kappa = self.n, self.kappa
        if self._flat:
            out = -0.5 * n * np.log(4.0 * math.pi * t) - r * r / (4.0 * t)
        else:
            # the Gaussian factor is kept in the original variables so that
            # K_{1,kappa} is bitwise the Euclidean kernel
            t, r = np.broadcast_arrays(t, r)
            out = np.full(t.shape, -np.inf)
            ok = kappa * r <= _R_OVERFLOW
            if np.any(ok):
                tk, rk = t[ok], r[ok]
                power, log_pre, prof = self._profiles(kappa * kappa * tk, kappa * rk, 0)
                with np.errstate(divide="ignore"):
                    out[ok] = ((n - 2 * power) * math.log(kappa) - power * np.log(4.0 * math.pi * tk)
                               - rk * rk / (4.0 * tk) + log_pre + np.log(prof[0]))
        if self.perturb:
            out = out + math.log1p(self.perturb * self.kappa)
        return out

    def _cached_log_k(self, t, r):
        cache = self._cache
        if cache.spacing is None:
            return cache.get((t, r), lambda a, b: float(self._log_k_array(np.float64(a), np.float64(b))))
        dlogt, dr = cache.spacing
        u = math.log(t) / dlogt
        v = r / dr
        i0, j0 = math.floor(u), math.floor(v)
        fu, fv = u - i0, v - j0

        def node(i, j):
            return cache.get((i, j), lambda a, b: float(
                self._log_k_array(np.float64(math.exp(a * dlogt)), np.float64(b * dr))))

        return ((1 - fu) * (1 - fv) * node(i0, j0) + fu * (1 - fv) * node(i0 + 1, j0)
                + (1 - fu) * fv * node(i0, j0 + 1) + fu * fv * node(i0 + 1, j0 + 1))

    def k(self, t, r):
        """``K_{n,kappa}(t, r)``."""
        return np.exp(self.log_k(t, r))

    def _unit_ratios(self, T, R):
        _, _, prof = self._profiles(T, R, 2)
        r1 = prof[1] / prof[0]
        r2 = prof[2] / prof[0]
        return r1, r2

    def dlog_k(self, t, r):
        """``(d/dr log K, d^2/dr^2 log K)``; requires ``r > 0``."""
        t, r, scalar = _check_tr(t, r)
        if np.any(r == 0):
            raise DomainError("log-derivatives are defined only for r > 0")
        kappa = self.kappa
        if self._flat:
            first = -r / (2.0 * t)
            second = np.broadcast_to(-1.0 / (2.0 * t), np.shape(first)).copy()
        else:
            T, R = np.broadcast_arrays(kappa * kappa * t, kappa * r)
            r1, r2 = self._unit_ratios(T, R)
            sh = np.sinh(R)
            first = -kappa * sh * r1
            second = kappa * kappa * (-np.cosh(R) * r1 + sh * sh * (r2 - r1 * r1))
        return _maybe_scalar(first, scalar), _maybe_scalar(second, scalar)

    def defect(self, t, r):
        """``d^2/dr^2 log K - ct_kappa(r) d/dr log K``; requires ``r > 0``."""
        t, r, scalar = _check_tr(t, r)
        if np.any(r == 0):
            raise DomainError("the super-convexity defect is defined only for r > 0")
        kappa = self.kappa
        if self._flat:
            return _maybe_scalar(np.zeros(np.broadcast_shapes(np.shape(t), np.shape(r))), scalar)
        T, R = np.broadcast_arrays(kappa * kappa * t, kappa * r)
        r1, r2 = self._unit_ratios(T, R)
        sh = np.sinh(R)
        return _maybe_scalar(kappa * kappa * sh * sh * (r2 - r1 * r1), scalar)


def _check_tr(t, r):
    scalar = np.ndim(t) == 0 and np.ndim(r) == 0
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("kernel time must be positive")
    if np.any(~(r >= 0)):
        raise DomainError("kernel distance must be nonnegative")
    return t, r, scalar


def _maybe_scalar(x, scalar):
    return float(x) if scalar else x


# -- functional interface -------------------------------------------------------

def eval_k(ev: KernelEvaluator, t, r):
    """``K_{n,kappa}(t, r)`` for the evaluator's ``n`` and ``kappa``."""
    return ev.k(t, r)


def eval_log_k(ev: KernelEvaluator, t, r):
    return ev.log_k(t, r)


def eval_dlog_k(ev: KernelEvaluator, t, r):
    """First and second radial derivatives of ``log K_{n,kappa}``."""
    return ev.dlog_k(t, r)


def superconvexity_defect(ev: KernelEvaluator, t, r):
    """``d_r^2 log K - ct_kappa(r) d_r log K``, nonnegative for every kernel."""
    return ev.defect(t, r)


def dm_bound_ratio(ev: KernelEvaluator, t, r):
    """Ratio of ``K_{N}(t, r)`` to the two-sided decay profile with ``C = 1``.

    With ``N = ev.n = n + 1`` the profile is
    ``t^{-N/2} exp(-n^2 t/4 - r^2/(4t) - n r/2) (1+r+t)^{n/2-1} (1+r)``.
    Only defined for the unit-curvature kernel.
    """
    if ev.kappa != 1.0:
        raise DomainError("decay-bound ratio is stated for kappa = 1 only")
    t, r, scalar = _check_tr(t, r)
    n = ev.n - 1
    log_bound = (-0.5 * (n + 1) * np.log(t) - 0.25 * n * n * t - r * r / (4.0 * t) - 0.5 * n * r
                 + (0.5 * n - 1.0) * np.log1p(r + t) + np.log1p(r))
    return _maybe_scalar(np.exp(ev._log_k_array(t, r) - log_bound), scalar)


def millison_raise(ev: KernelEvaluator, t, r):
    """``K_{n+2,kappa}`` obtained from ``K_{n,kappa}`` by the Millison step.

    ``K_{n+2,k}(t,r) = -exp(-n k^2 t) k / (2 pi sinh(k r)) d_r K_{n,k}(t,r)``,
    and for ``k = 0`` the factor ``k / sinh(k r)`` becomes ``1 / r``.
    """
    first, _ = ev.dlog_k(t, r)
    value = ev.k(t, r) * first
    kappa = ev.kappa
    if ev._flat:
        return -value / (2.0 * math.pi * np.asarray(r))
    return -np.exp(-ev.n * kappa * kappa * np.asarray(t)) * kappa * value / (
        2.0 * math.pi * np.sinh(kappa * np.asarray(r)))


def descent_integral(ev_high: KernelEvaluator, t: float, r: float,
                     constant: float = math.sqrt(2.0)) -> float:
    """Forward descent from ``K_{n+1}`` (the evaluator) down to ``K_n``.

    Computes ``constant * int_r^inf exp((2n-1) t/4) K_{n+1}(t,s) sinh s /
    sqrt(cosh s - cosh r) ds`` for the unit-curvature kernel, by adaptive
    quadrature in ``v = sqrt(cosh s - cosh r)`` so that the integrand is
    smooth.  With the default constant the result equals ``K_n(t, r)``.
    """
    if ev_high.kappa != 1.0:
        raise DomainError("descent identity is stated for kappa = 1")
    n = ev_high.n - 1
    if n < 1:
        raise UnsupportedDimensionError("descent needs n + 1 >= 2")
    t = float(t)
    r = float(r)
    _check_tr(t, r)
    base = 2.0 * math.sinh(0.5 * r) ** 2

    def integrand(v):
        s = float(_radial.arccosh1p(base + v * v))
        return 2.0 * math.exp((2 * n - 1) * t / 4.0 + ev_high._log_k_array(t, s))

    scale = math.sqrt(2.0 * t * (math.sinh(r) / r if r > 0 else 1.0))
    breaks = [0.0] + [scale * 2.0 ** k for k in range(-2, 12)]
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in zip(breaks[:-1], breaks[1:]):
                total += integrate.quad(integrand, a, b, epsabs=0.0, epsrel=ev_high.quad.rtol,
                                        limit=200)[0]
            total += integrate.quad(integrand, breaks[-1], np.inf, epsabs=0.0,
                                    epsrel=ev_high.quad.rtol, limit=200)[0]
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"descent integral did not converge: {exc}") from exc
    return constant * total


# -- backwards kernels -----------------------------------------------------------

@dataclass(frozen=True)
class BackwardsKernel:
    """``Phi(t, x) = K_{n,kappa}(t0 - t, dist(x, x0))`` on a model space."""

    evaluator: KernelEvaluator
    t0: float
    x0: np.ndarray
    space: object = field(default=None)

    def __call__(self, t, x):
        return eval_phi(self, t, x)


def eval_phi(bk: BackwardsKernel, t, x):
    """Value of the backwards kernel at time ``t < t0`` and point(s) ``x``."""
    tau = bk.t0 - np.asarray(t, dtype=float)
    if np.any(~(tau > 0)):
        raise DomainError("backwards kernel is defined only for t < t0")
    rho = bk.space.distance(x, bk.x0)
    return bk.evaluator.k(tau, rho)


def _log_sphere_radius(kappa, r):
    """``log S_kappa(r)`` with ``S = sinh(kappa r)/kappa`` (or ``r``)."""
    r = np.asarray(r, dtype=float)
    if kappa == 0.0:
        return np.log(r)
    kr = kappa * r
    with np.errstate(divide="ignore"):
        return np.where(kr > 20.0, kr - math.log(2.0) + np.log1p(-np.exp(-2.0 * kr)),
                        np.log(np.sinh(np.minimum(kr, 20.0)))) - math.log(kappa)


def normalization_integral(ev: KernelEvaluator, t: float) -> float:
    """Total heat ``int_0^inf K(t,r) |S^{n-1}| S_kappa(r)^{n-1} dr``; equals 1."""
    t = float(t)
    if not t > 0:
        raise DomainError("kernel time must be positive")
    n, kappa = ev.n, ev.kappa
    log_omega = math.log(sphere_area(n - 1))

    def integrand(r):
        val = log_omega + ev._log_k_array(t, np.float64(r))
        if n > 1:
            if r == 0.0:
                return 0.0
            val = val + (n - 1) * _log_sphere_radius(kappa, r)
        return float(np.exp(val))

    peak = (n - 1) * kappa * t
    width = math.sqrt(2.0 * t)
    upper = peak + 60.0 * width + 1.0
    points = sorted({min(peak, upper), min(peak + 5 * width, upper)} - {0.0, upper})
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(integrand, 0.0, upper, points=points or None, epsabs=0.0,
                                      epsrel=ev.quad.rtol, limit=400)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"normalization integral did not converge: {exc}") from exc
    return val
