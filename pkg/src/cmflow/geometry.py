"""Ambient model spaces: Euclidean space, the hyperboloid model of constant
curvature ``-kappa0**2``, and rotationally symmetric warped surfaces
``dr^2 + phi(r)^2 dtheta^2``.

Points are plain numpy arrays whose last axis holds coordinates (Cartesian,
Minkowski ``(x0, x1, ..., xm)`` with ``x0 > 0``, or polar ``(r, theta)``).
All distance-function derivatives are the exact space-form closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CoincidentPointsError, DomainError, UnsupportedPairError

__all__ = [
    "ct",
    "f_kappa",
    "sphere_radius",
    "log_sphere_radius",
    "ModelSpace",
    "Euclidean",
    "Hyperbolic",
    "Warped2D",
    "WarpingProfile",
    "blossom_profile",
    "sinh_profile",
    "Frame",
    "minkowski",
    "distance",
    "laplacian_rho",
    "hessian_rho",
    "sectional_curvature",
    "grad_rho",
    "space_from_json",
]

MAX_AMBIENT_DIM = 7
_COINCIDENT = 1e-14


# -- comparison functions ----------------------------------------------------------

def ct(kappa: float, r):
    """``kappa coth(kappa r)``, or ``1/r`` when ``kappa = 0``."""
    r = np.asarray(r, dtype=float)
    if kappa == 0.0:
        return 1.0 / r
    return kappa / np.tanh(kappa * r)


def f_kappa(kappa: float, r):
    """``(cosh(kappa r) - 1) / kappa**2``, or ``r**2 / 2`` when ``kappa = 0``."""
    r = np.asarray(r, dtype=float)
    if kappa == 0.0:
        return 0.5 * r * r
    return 2.0 * np.sinh(0.5 * kappa * r) ** 2 / kappa**2


def sphere_radius(kappa: float, r):
    """``sinh(kappa r) / kappa``, or ``r`` when ``kappa = 0``."""
    r = np.asarray(r, dtype=float)
    if kappa == 0.0:
        return r
    return np.sinh(kappa * r) / kappa


def log_sphere_radius(kappa: float, r):
    """Overflow-safe ``log`` of :func:`sphere_radius`."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        if kappa == 0.0:
            return np.log(r)
        kr = kappa * r
        big = kr > 20.0
        safe = np.where(big, 1.0, kr)
        return np.where(big, kr - math.log(2.0) + np.log1p(-np.exp(-2.0 * kr)),
                        np.log(np.sinh(safe))) - math.log(kappa)


def minkowski(u, v):
    """Minkowski product ``-u0 v0 + sum_i ui vi`` along the last axis."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return -u[..., 0] * v[..., 0] + np.sum(u[..., 1:] * v[..., 1:], axis=-1)


# -- frames --------------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    """Orthonormal tangent and normal vectors of a submanifold at ``base``."""

    base: np.ndarray
    tangent_vectors: np.ndarray
    normal_vectors: np.ndarray

    def check(self, space: "ModelSpace", tol: float = 1e-10) -> None:
        vecs = np.concatenate([np.reshape(self.tangent_vectors, (-1, np.shape(self.base)[-1])),
                               np.reshape(self.normal_vectors, (-1, np.shape(self.base)[-1]))])
        gram = space.inner(self.base, vecs[:, None, :], vecs[None, :, :])
        if np.max(np.abs(gram - np.eye(len(vecs)))) > tol:
            raise DomainError("frame is not orthonormal")


# -- model spaces ---------------------------------------------------------------------

class ModelSpace:
    """Common interface of the ambient geometries.

    Attributes
    ----------
    dim : int
        Intrinsic dimension ``m``.
    kappa0 : float
        Largest ``kappa`` with sectional curvature ``<= -kappa**2``
        everywhere (0 for Euclidean space).
    """

    dim: int
    kappa0: float
    name: str

    def inner(self, x, u, v):
        raise NotImplementedError

    def norm(self, x, u):
        return np.sqrt(np.maximum(self.inner(x, u, u), 0.0))

    def distance(self, x, y):
        raise NotImplementedError

    def grad_rho(self, x0, x):
        raise NotImplementedError

    def laplacian_rho(self, x0, x):
        rho = self._nonzero_distance(x0, x)
        return (self.dim - 1) * ct(self.kappa0, rho)

    def hessian_rho(self, x0, x, v):
        """``(nabla^2 rho)(v, v)`` for the distance to ``x0``."""
        rho = self._nonzero_distance(x0, x)
        g = self.grad_rho(x0, x)
        dv = self.inner(x, g, v)
        return ct(self.kappa0, rho) * (self.inner(x, v, v) - dv * dv)

    def sectional_curvature(self, x):
        return np.full(np.shape(x)[:-1], -self.kappa0**2)

    def ct(self, r):
        """Mean curvature of the geodesic unit-normal sphere of radius ``r``, per dimension."""
        return ct(self.kappa0, r)

    def _nonzero_distance(self, x0, x):
        rho = self.distance(x0, x)
        if np.any(rho <= _COINCIDENT):
            raise CoincidentPointsError("distance function is singular at its center")
        return rho

    # chart helpers used by the entropy search and flows
    def origin(self) -> np.ndarray:
        raise NotImplementedError

    def project(self, x, u):
        """Orthogonal projection of an ambient vector onto ``T_x``."""
        return u

    def normalize(self, x):
        """Snap coordinates back onto the model (identity for flat space)."""
        return np.asarray(x, dtype=float)

    def exp(self, x, u):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def tangent_basis(self, x) -> np.ndarray:
        """Orthonormal basis of ``T_x`` as rows of an ``(m, D)`` array."""
        raise NotImplementedError

    def from_chart(self, center, y):
        """Exponential coordinates ``y in R^m`` about ``center``."""
        y = np.asarray(y, dtype=float)
        return self.exp(center, y @ self.tangent_basis(center))

    def to_chart(self, center, x):
        return self.inner(center, self.log(center, x)[..., None, :], self.tangent_basis(center))

    def mean_point(self, points, weights=None):
        raise NotImplementedError

    def sphere_area(self, n: int, radius):
        """Area of the geodesic ``n``-sphere of the given radius (``n = dim - 1``)."""
        from .kernel import sphere_area
        return sphere_area(n) * sphere_radius(self.kappa0, radius) ** n

    def sphere_mean_curvature(self, n: int, radius):
        return n * ct(self.kappa0, radius)

    def to_json(self) -> dict:
        raise NotImplementedError


class Euclidean(ModelSpace):
    name = "euclidean"

    def __init__(self, dim: int):
        if int(dim) != dim or not 1 <= dim <= MAX_AMBIENT_DIM:
            raise DomainError(f"ambient dimension {dim} outside 1..{MAX_AMBIENT_DIM}")
        self.dim = int(dim)
        self.kappa0 = 0.0
        self.coord_dim = self.dim

    def __repr__(self):
        return f"Euclidean({self.dim})"

    def __eq__(self, other):
        return isinstance(other, Euclidean) and other.dim == self.dim

    def __hash__(self):
        return hash(("euclidean", self.dim))

    def inner(self, x, u, v):
        return np.sum(np.asarray(u) * np.asarray(v), axis=-1)

    def distance(self, x, y):
        return np.linalg.norm(np.asarray(y, dtype=float) - np.asarray(x, dtype=float), axis=-1)

    def grad_rho(self, x0, x):
        d = np.asarray(x, dtype=float) - np.asarray(x0, dtype=float)
        rho = np.linalg.norm(d, axis=-1, keepdims=True)
        if np.any(rho <= _COINCIDENT):
            raise CoincidentPointsError("gradient of distance undefined at the center")
        return d / rho

    def origin(self):
        return np.zeros(self.dim)

    def exp(self, x, u):
        return np.asarray(x, dtype=float) + np.asarray(u, dtype=float)

    def log(self, x, y):
        return np.asarray(y, dtype=float) - np.asarray(x, dtype=float)

    def tangent_basis(self, x):
        return np.eye(self.dim)

    def mean_point(self, points, weights=None):
        return np.average(np.asarray(points, dtype=float), axis=0, weights=weights)

    def to_json(self):
        return {"variant": "euclidean", "dim": self.dim}


class Hyperbolic(ModelSpace):
    """Hyperboloid ``<x, x> = -kappa0**-2``, ``x0 > 0``, in Minkowski space."""

    name = "hyperbolic"

    def __init__(self, dim: int, kappa0: float = 1.0):
        if int(dim) != dim or not 1 <= dim <= MAX_AMBIENT_DIM:
            raise DomainError(f"ambient dimension {dim} outside 1..{MAX_AMBIENT_DIM}")
        if not kappa0 > 0:
            raise DomainError("hyperbolic curvature scale must be positive")
        self.dim = int(dim)
        self.kappa0 = float(kappa0)
        self.coord_dim = self.dim + 1

    def __repr__(self):
        return f"Hyperbolic({self.dim}, kappa0={self.kappa0})"

    def __eq__(self, other):
        return isinstance(other, Hyperbolic) and (other.dim, other.kappa0) == (self.dim, self.kappa0)

    def __hash__(self):
        return hash(("hyperbolic", self.dim, self.kappa0))

    def inner(self, x, u, v):
        return minkowski(u, v)

    def check_point(self, x, tol: float = 1e-12) -> None:
        x = np.asarray(x, dtype=float)
        k2 = self.kappa0**2
        if np.any(x[..., 0] <= 0) or np.any(np.abs(k2 * minkowski(x, x) + 1.0) > tol * np.maximum(1.0, k2 * x[..., 0] ** 2)):
            raise DomainError("point is not on the hyperboloid")

    def normalize(self, x):
        x = np.array(x, dtype=float)
        spatial = x[..., 1:]
        x[..., 0] = np.sqrt(self.kappa0**-2 + np.sum(spatial * spatial, axis=-1))
        return x

    def lift(self, spatial):
        """Hyperboloid point with the given spatial coordinates."""
        spatial = np.asarray(spatial, dtype=float)
        x0 = np.sqrt(self.kappa0**-2 + np.sum(spatial * spatial, axis=-1))
        return np.concatenate([x0[..., None], spatial], axis=-1)

    def distance(self, x, y):
        # chordal form avoids arccosh cancellation for nearby points
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        chord2 = np.maximum(minkowski(d, d), 0.0)
        k = self.kappa0
        return (2.0 / k) * np.arcsinh(0.5 * k * np.sqrt(chord2))

    def grad_rho(self, x0, x):
        x0 = np.asarray(x0, dtype=float)
        x = np.asarray(x, dtype=float)
        k = self.kappa0
        rho = self.distance(x0, x)[..., None]
        if np.any(rho <= _COINCIDENT):
            raise CoincidentPointsError("gradient of distance undefined at the center")
        cm1 = 2.0 * np.sinh(0.5 * k * rho) ** 2
        g = k * ((x - x0) + cm1 * x) / np.sinh(k * rho)
        g = self.project(x, g)
        return g / np.sqrt(minkowski(g, g))[..., None]

    def origin(self):
        o = np.zeros(self.dim + 1)
        o[0] = 1.0 / self.kappa0
        return o

    def project(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return u + self.kappa0**2 * minkowski(u, x)[..., None] * x

    def exp(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        k = self.kappa0
        nu = np.sqrt(np.maximum(minkowski(u, u), 0.0))[..., None]
        knu = k * nu
        sinhc = np.where(knu > 1e-8, np.sinh(knu) / np.where(knu > 1e-8, knu, 1.0), 1.0 + knu**2 / 6.0)
        return self.normalize(np.cosh(knu) * x + sinhc * u)

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rho = self.distance(x, y)[..., None]
        k = self.kappa0
        krho = k * rho
        # y - cosh(k rho) x, with cosh - 1 taken from the stable chordal distance
        cm1 = 2.0 * np.sinh(0.5 * krho) ** 2
        u = self.project(x, (y - x) - cm1 * x)
        # rescale to the measured Minkowski length so exp sees exactly rho
        length = np.sqrt(np.maximum(minkowski(u, u), 0.0))[..., None]
        small = krho <= 1e-8
        scale = np.where(small, 1.0 - krho**2 / 6.0, rho / np.where(small, 1.0, length))
        return u * scale

    def tangent_basis(self, x):
        x = np.asarray(x, dtype=float)
        basis = []
        for i in range(1, self.dim + 1):
            e = np.zeros(self.dim + 1)
            e[i] = 1.0
            v = self.project(x, e)
            for b in basis:
                v = v - minkowski(v, b) * b
            basis.append(v / math.sqrt(minkowski(v, v)))
        return np.array(basis)

    def mean_point(self, points, weights=None):
        m = np.average(np.asarray(points, dtype=float), axis=0, weights=weights)
        return m / (self.kappa0 * math.sqrt(-minkowski(m, m)))

    def to_klein(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 1:] / x[..., :1]

    def to_json(self):
        return {"variant": "hyperbolic", "dim": self.dim, "kappa0": self.kappa0}


@dataclass(frozen=True)
class WarpingProfile:
    """Analytic warping function with its first two derivatives."""

    name: str
    phi: Callable
    dphi: Callable
    ddphi: Callable
    # closed-form log phi avoids overflow for fast-growing profiles
    log_phi: Callable | None = None
    curvature_bound: float = 0.0


def blossom_profile() -> WarpingProfile:
    """``phi(r) = r exp(r**4 / 4)``: curvature ``-(5 r^2 + r^6)``."""
    return WarpingProfile(
        name="blossom",
        phi=lambda r: r * np.exp(0.25 * np.asarray(r) ** 4),
        dphi=lambda r: np.exp(0.25 * np.asarray(r) ** 4) * (1.0 + np.asarray(r) ** 4),
        ddphi=lambda r: np.exp(0.25 * np.asarray(r) ** 4) * np.asarray(r) ** 3 * (5.0 + np.asarray(r) ** 4),
        log_phi=lambda r: np.log(r) + 0.25 * np.asarray(r) ** 4,
        curvature_bound=0.0,
    )


def sinh_profile(kappa: float = 1.0) -> WarpingProfile:
    """``phi(r) = sinh(kappa r)/kappa``, the hyperbolic plane in polar form."""
    return WarpingProfile(
        name=f"sinh:{kappa}",
        phi=lambda r: np.sinh(kappa * np.asarray(r)) / kappa,
        dphi=lambda r: np.cosh(kappa * np.asarray(r)),
        ddphi=lambda r: kappa * np.sinh(kappa * np.asarray(r)),
        log_phi=lambda r: log_sphere_radius(kappa, r),
        curvature_bound=kappa,
    )


class Warped2D(ModelSpace):
    """Surface ``dr^2 + phi(r)^2 dtheta^2`` in polar coordinates ``(r, theta)``.

    Only quantities measured from the pole ``r = 0`` are supported; the
    warped flows all involve pole-centered circles.
    """

    name = "warped"

    def __init__(self, profile: WarpingProfile, check_grid=None):
        self.profile = profile
        self.dim = 2
        self.coord_dim = 2
        self.kappa0 = float(profile.curvature_bound)
        r = np.linspace(1e-3, 3.0, 301) if check_grid is None else np.asarray(check_grid)
        if abs(float(profile.phi(0.0))) > 1e-12 or abs(float(profile.dphi(0.0)) - 1.0) > 1e-12:
            raise DomainError("warping profile needs phi(0) = 0 and phi'(0) = 1")
        if np.any(profile.ddphi(r) < 0):
            raise DomainError("warping profile must be convex (nonpositive curvature)")

    def __repr__(self):
        return f"Warped2D({self.profile.name})"

    def __eq__(self, other):
        return isinstance(other, Warped2D) and other.profile.name == self.profile.name

    def __hash__(self):
        return hash(("warped", self.profile.name))

    @staticmethod
    def _is_pole(x):
        return np.asarray(x, dtype=float)[..., 0] == 0.0

    def inner(self, x, u, v):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        phi = self.profile.phi(x[..., 0])
        return u[..., 0] * v[..., 0] + phi * phi * u[..., 1] * v[..., 1]

    def distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.all(self._is_pole(x)):
            return np.broadcast_to(y[..., 0], np.broadcast_shapes(x.shape, y.shape)[:-1]).copy()
        if np.all(self._is_pole(y)):
            return np.broadcast_to(x[..., 0], np.broadcast_shapes(x.shape, y.shape)[:-1]).copy()
        raise UnsupportedPairError("warped distance is only available from the pole")

    def _radius_from_pole(self, x0, x):
        if not np.all(self._is_pole(x0)):
            raise UnsupportedPairError("warped distance derivatives need the pole as center")
        r = np.asarray(x, dtype=float)[..., 0]
        if np.any(r <= _COINCIDENT):
            raise CoincidentPointsError("distance function is singular at the pole")
        return r

    def grad_rho(self, x0, x):
        r = self._radius_from_pole(x0, x)
        out = np.zeros(np.shape(r) + (2,))
        out[..., 0] = 1.0
        return out

    def laplacian_rho(self, x0, x):
        r = self._radius_from_pole(x0, x)
        return self.profile.dphi(r) / self.profile.phi(r)

    def hessian_rho(self, x0, x, v):
        # nabla^2 r = phi phi' dtheta^2 in polar coordinates
        r = self._radius_from_pole(x0, x)
        v = np.asarray(v, dtype=float)
        return self.profile.phi(r) * self.profile.dphi(r) * v[..., 1] ** 2

    def sectional_curvature(self, x):
        r = np.asarray(x, dtype=float)[..., 0]
        if np.any(r <= 0):
            raise DomainError("warped curvature is evaluated for r > 0")
        return -self.profile.ddphi(r) / self.profile.phi(r)

    def origin(self):
        return np.zeros(2)

    def sphere_area(self, n: int, radius):
        return 2.0 * math.pi * self.profile.phi(radius)

    def log_sphere_area(self, radius):
        lp = self.profile.log_phi or (lambda r: np.log(self.profile.phi(r)))
        return math.log(2.0 * math.pi) + lp(radius)

    def sphere_mean_curvature(self, n: int, radius):
        return self.profile.dphi(radius) / self.profile.phi(radius)

    def to_json(self):
        return {"variant": "warped", "profile": self.profile.name}


def space_from_json(doc: dict) -> ModelSpace:
    variant = doc.get("variant")
    if variant == "euclidean":
        return Euclidean(int(doc["dim"]))
    if variant == "hyperbolic":
        return Hyperbolic(int(doc["dim"]), float(doc.get("kappa0", 1.0)))
    if variant == "warped":
        name = doc.get("profile", "blossom")
        if name == "blossom":
            return Warped2D(blossom_profile())
        if name.startswith("sinh"):
            kappa = float(name.split(":")[1]) if ":" in name else 1.0
            return Warped2D(sinh_profile(kappa))
        raise DomainError(f"unknown warping profile {name!r}")
    raise DomainError(f"unknown model space {variant!r}")


# -- module-level forms of the distance-function operations -------------------------------

def distance(M: ModelSpace, x, y):
    return M.distance(x, y)


def laplacian_rho(M: ModelSpace, x0, x):
    return M.laplacian_rho(x0, x)


def hessian_rho(M: ModelSpace, x0, x, v):
    return M.hessian_rho(x0, x, v)


def sectional_curvature(M: ModelSpace, x):
    return M.sectional_curvature(x)


def grad_rho(M: ModelSpace, x0, x):
    return M.grad_rho(x0, x)
