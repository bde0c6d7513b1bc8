"""Radial special-function core for the hyperbolic heat kernels.

Every kernel K_n is expressed through the variable ``c = cosh r``.  In that
variable the Millison step is just ``-d/dc`` (times elementary factors), so
all odd and even kernels, and their radial derivatives, reduce to Taylor
jets in ``c`` of two building blocks:

* ``h(c) = s / sinh(s)`` with ``s = arccosh(c)``,
* ``w(c) = exp(-s**2 / (4 t))``.

``h`` satisfies ``(c**2 - 1) h' + c h = 1``, which gives a power series
about ``c = 1`` and a three-term recurrence for the derivatives away from it.
Both routes produce sums of same-signed terms, so no cancellation occurs in
the jets themselves.

Quantities are returned with the Gaussian factor ``exp(-r**2 / (4 t))``
divided out so that callers can work in log space.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

# |c - 1| below this uses the power series about c = 1 (radius of convergence 2).
_SERIES_SWITCH = 0.5
_SERIES_TERMS = 64
# Tail cutoff: the descent integrand is dropped once it has decayed by e^-46.
_TAIL_EXPONENT = 46.0
_MAX_PANEL_WIDTH = 3.0


@lru_cache(maxsize=None)
def _h_series_coefficients(nterms: int = _SERIES_TERMS) -> np.ndarray:
    a = np.empty(nterms)
    a[0] = 1.0
    for j in range(1, nterms):
        a[j] = -j * a[j - 1] / (2 * j + 1)
    return a


def arccosh1p(x):
    """``arccosh(1 + x)`` accurate for small ``x >= 0``."""
    return 2.0 * np.arcsinh(np.sqrt(0.5 * np.asarray(x, dtype=float)))


def h_jet(x, order: int) -> np.ndarray:
    """Normalized Taylor coefficients ``h^(k)(1 + x) / k!`` for ``k <= order``.

    Parameters
    ----------
    x : array_like
        Offsets ``c - 1 >= 0``.
    order : int
        Highest derivative order.

    Returns
    -------
    ndarray
        Shape ``(order + 1,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.reshape(-1)
    out = np.empty((order + 1,) + x.shape)
    near = x <= _SERIES_SWITCH
    far = ~near

    if np.any(near):
        xn = x[near]
        a = _h_series_coefficients()
        nterms = a.size
        for k in range(order + 1):
            # coefficient of x^(j-k) in h^(k)/k! is a_j * C(j, k)
            coeff = np.array([a[j] * math.comb(j, k) for j in range(k, nterms)])
            acc = np.zeros_like(xn)
            for cj in coeff[::-1]:
                acc = acc * xn + cj
            out[k][near] = acc

    if np.any(far):
        xf = x[far]
        c = 1.0 + xf
        root = np.sqrt(xf) * np.sqrt(xf + 2.0)
        with np.errstate(over="ignore"):
            q = root * root
        s = arccosh1p(xf)
        derivs = [s / root]
        if order >= 1:
            derivs.append((1.0 - c * derivs[0]) / q)
        for k in range(1, order):
            derivs.append(-((2 * k + 1) * c * derivs[k] + k * k * derivs[k - 1]) / q)
        for k in range(order + 1):
            out[k][far] = derivs[k] / math.factorial(k)
    return out.reshape((order + 1,) + shape)


def gauss_jet(hj: np.ndarray, t, order: int) -> np.ndarray:
    """Taylor coefficients of ``w(c + e) / w(c)`` in ``e`` up to ``e**order``.

    ``hj`` is the output of :func:`h_jet` with at least ``order`` rows; ``t``
    broadcasts against its trailing shape.  Uses ``phi' = 2 h`` with
    ``phi = arccosh(c)**2``.
    """
    t = np.asarray(t, dtype=float)
    a = [None] + [-hj[k - 1] / (2.0 * t * k) for k in range(1, order + 1)]
    b = [np.ones(np.broadcast_shapes(hj.shape[1:], t.shape))]
    for k in range(1, order + 1):
        acc = np.zeros_like(b[0])
        for i in range(1, k + 1):
            acc = acc + i * a[i] * b[k - i]
        b.append(acc / k)
    return np.stack(b)


def _signed_derivatives(jet: np.ndarray, start: int) -> np.ndarray:
    """``(-d/dc)^k`` values from normalized coefficients, ``k >= start``."""
    ks = np.arange(start, jet.shape[0])
    scale = np.array([(-1.0) ** k * math.factorial(k) for k in ks])
    return jet[start:] * scale.reshape((-1,) + (1,) * (jet.ndim - 1))


def odd_profile(r, t, m: int, extra: int = 0) -> np.ndarray:
    """``(-d/dc)^j w`` at ``c = cosh r`` divided by ``w``, for ``j = m..m+extra``.

    These are the radial profiles of K_{2m+1}, K_{2m+3}, ... with the Gaussian
    factor removed.
    """
    r = np.asarray(r, dtype=float)
    x = 2.0 * np.sinh(0.5 * r) ** 2
    order = m + extra
    hj = h_jet(x, max(order - 1, 0))
    if order == 0:
        return np.ones((1,) + np.broadcast_shapes(r.shape, np.shape(t)))
    # gauss_jet needs h up to order-1 only
    bj = gauss_jet(hj, t, order)
    return _signed_derivatives(bj, m)


@lru_cache(maxsize=32)
def _gauss_legendre(nodes: int):
    return np.polynomial.legendre.leggauss(nodes)


def descent_nodes(r, t, nodes: int, panels: int):
    """Quadrature nodes for ``int_0^inf F(cosh r + v**2) dv``.

    The substitution ``v**2 = cosh s - cosh r`` has already removed the
    inverse square-root endpoint singularity; here ``v = sigma sinh(y)``
    compresses the slowly decaying large-``t`` tail and composite
    Gauss-Legendre panels cover ``y`` in ``[0, Y]``.

    Returns ``(x, s, weight)`` with shapes ``broadcast(r, t) + (panels*nodes,)``;
    ``x = c - 1`` at each node and ``weight`` includes ``dv/dy``.
    """
    r = np.asarray(r, dtype=float)[..., None]
    t = np.asarray(t, dtype=float)[..., None]
    s_cut = -t + np.sqrt((t + r) ** 2 + 4.0 * _TAIL_EXPONENT * t)
    v_cut = np.sqrt(2.0 * np.sinh(0.5 * (s_cut + r)) * np.sinh(0.5 * (s_cut - r)))
    sinhc = np.where(r > 1e-8, np.sinh(r) / np.where(r > 1e-8, r, 1.0), 1.0)
    sigma_gauss = np.sqrt(2.0 * t * sinhc)
    sigma_tail = np.sqrt(2.0 * np.sinh(r + 0.5) * np.sinh(0.5))
    sigma = np.minimum(sigma_gauss, sigma_tail)
    y_max = np.arcsinh(v_cut / sigma)
    # long mapped intervals (large t) get extra panels of bounded width
    if y_max.size:
        panels = max(panels, int(math.ceil(float(np.max(y_max)) / _MAX_PANEL_WIDTH)))

    xg, wg = _gauss_legendre(nodes)
    edges = np.arange(panels)
    # unit-interval positions and weights of the composite rule
    u = ((edges[:, None] + 0.5 * (xg[None, :] + 1.0)) / panels).ravel()
    wu = np.tile(wg / (2.0 * panels), panels)
    y = y_max * u
    v = sigma * np.sinh(y)
    weight = wu * y_max * sigma * np.cosh(y)
    x = 2.0 * np.sinh(0.5 * r) ** 2 + v * v
    s = arccosh1p(x)
    return x, s, weight


def even_profile(r, t, m: int, extra: int = 0, nodes: int = 24, panels: int = 4) -> np.ndarray:
    """Descent integrals ``2 int_0^inf (-d/dc)^j [h w](cosh r + v**2) dv``.

    Returned for ``j = m..m+extra`` with ``exp(-r**2/(4t))`` divided out.
    ``d/d(cosh r)`` of the ``j``-th integral is minus the ``(j+1)``-th, so
    the extra orders give exact radial derivatives.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(r.shape, t.shape)
    r = np.broadcast_to(r, shape)
    t = np.broadcast_to(t, shape)
    x, s, weight = descent_nodes(r, t, nodes, panels)
    tt = t[..., None]
    order = m + extra
    hj = h_jet(x, order)
    bj = gauss_jet(hj, tt, order)
    # Cauchy product h * w
    pj = np.empty_like(hj)
    for k in range(order + 1):
        acc = np.zeros(x.shape)
        for i in range(k + 1):
            acc = acc + hj[i] * bj[k - i]
        pj[k] = acc
    u = _signed_derivatives(pj, m)
    damp = np.exp((r[..., None] ** 2 - s * s) / (4.0 * tt))
    return 2.0 * np.sum(u * (damp * weight), axis=-1)
