"""Discretized submanifolds carrying quadrature weights, frames and mean
curvature.

Every variant exposes :meth:`Submanifold.radial_nodes`, the distances from a
center ``x0`` to a set of quadrature points together with their weights.
Kernel integrals only ever need those two arrays because the backwards
kernels are radial.  The quadrature is adapted to the kernel width so that
small backwards times are resolved no matter how coarse the discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateGeometryError, DomainError, UnsupportedPairError
from .geometry import (
    Euclidean,
    Frame,
    Hyperbolic,
    ModelSpace,
    Warped2D,
    ct,
    log_sphere_radius,
    sphere_radius,
)
from .kernel import BackwardsKernel, sphere_area

__all__ = [
    "QuadratureSample",
    "SampleSet",
    "Submanifold",
    "GeodesicSphere",
    "PolylineCurve",
    "RevolutionSurface",
    "UnionSubmanifold",
    "sample",
    "mean_curvature",
    "integrate_kernel",
    "volume_in_ball",
]

MIN_SEGMENT = 1e-10
# quadrature panels near x0 are no wider than this fraction of sqrt(tau)
_PANEL_PER_WIDTH = 0.5
_NEAR_WIDTHS = 12.0
_MAX_SUBPANELS = 512
_SUBPANEL_NODES = 8


@lru_cache(maxsize=64)
def _gl(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class QuadratureSample:
    point: np.ndarray
    weight: float
    normal_frame: Frame
    mean_curvature_vector: np.ndarray


@dataclass(frozen=True)
class SampleSet:
    """Array form of a list of :class:`QuadratureSample`.

    ``points (N, D)``, ``weights (N,)``, ``tangents (N, n, D)``,
    ``normals (N, k, D)`` and ``mean_curvature (N, D)``.
    """

    points: np.ndarray
    weights: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    mean_curvature: np.ndarray

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i) -> QuadratureSample:
        frame = Frame(self.points[i], self.tangents[i], self.normals[i])
        return QuadratureSample(self.points[i], float(self.weights[i]), frame, self.mean_curvature[i])

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


class Submanifold:
    """Base class; concrete variants below."""

    space: ModelSpace
    n: int
    variant: str

    def area(self) -> float:
        raise NotImplementedError

    def sample(self, resolution: int = 64, toward=None) -> SampleSet:
        raise NotImplementedError

    def radial_nodes(self, x0, scale: float, resolution: int = 64):
        """Distances from ``x0`` and weights of a kernel-adapted quadrature.

        ``scale`` is the kernel width (``sqrt(tau)``); panels within a few
        widths of ``x0`` are refined to resolve it.
        """
        raise NotImplementedError

    def refined_resolution(self, resolution: int) -> int:
        """A resolution whose quadrature is strictly finer than ``resolution``."""
        return 2 * int(resolution)

    def bounding_ball(self):
        """``(center, radius)`` of a geodesic ball containing the submanifold."""
        raise NotImplementedError

    def spacing(self) -> float:
        """Typical mesh spacing ``h``."""
        raise NotImplementedError

    def search_chart(self):
        """Default chart for the entropy search, see :mod:`cmflow.entropy`."""
        center, radius = self.bounding_ball()
        return FullChart(self.space, center), radius

    def to_json(self) -> dict:
        raise NotImplementedError


# -- geodesic spheres ---------------------------------------------------------------

def _zonal_theta(d: float, radius: float, kappa0: float, scale: float, resolution: int):
    """Polar-angle nodes on ``[0, pi]`` refined toward ``theta = 0``."""
    q = max(16, int(resolution) // 4)
    s_r = float(sphere_radius(kappa0, radius))
    theta_c = min(math.pi, max(scale / s_r, 1e-9))
    edges = [0.0]
    edge = theta_c
    while edge < math.pi:
        edges.append(edge)
        edge *= 2.0
    edges.append(math.pi)
    edges = np.array(edges)
    u, w = _gl(q)
    lo, hi = edges[:-1, None], edges[1:, None]
    theta = (lo + (hi - lo) * u).ravel()
    wt = ((hi - lo) * w).ravel()
    return theta, wt


def _zonal_distance(space: ModelSpace, d: float, radius: float, theta):
    half = np.sin(0.5 * theta) ** 2
    if isinstance(space, Hyperbolic):
        k = space.kappa0
        arg = np.sinh(0.5 * k * (d - radius)) ** 2 + np.sinh(k * d) * np.sinh(k * radius) * half
        return (2.0 / k) * np.arcsinh(np.sqrt(arg))
    return np.sqrt((d - radius) ** 2 + 4.0 * d * radius * half)


class GeodesicSphere(Submanifold):
    """Exact geodesic sphere of the ambient space; never polygonized."""

    variant = "sphere"

    def __init__(self, space: ModelSpace, radius: float, center=None):
        if not radius > 0:
            raise DomainError("sphere radius must be positive")
        self.space = space
        self.radius = float(radius)
        self.center = space.origin() if center is None else np.asarray(center, dtype=float)
        if isinstance(space, Warped2D) and np.any(self.center != 0):
            raise UnsupportedPairError("warped circles must be centered at the pole")
        self.n = space.dim - 1

    def __repr__(self):
        return f"GeodesicSphere({self.space!r}, R={self.radius})"

    def area(self) -> float:
        return float(self.space.sphere_area(self.n, self.radius))

    def mean_curvature_magnitude(self) -> float:
        return float(self.space.sphere_mean_curvature(self.n, self.radius))

    def spacing(self) -> float:
        return math.pi * float(sphere_radius(self.space.kappa0, self.radius)) / 64.0

    def bounding_ball(self):
        return self.center, self.radius

    def search_chart(self):
        return AxisChart(self.space, self.center, self._axis(None)), self.radius

    def _axis(self, toward):
        basis = self.space.tangent_basis(self.center)
        if toward is None:
            return basis[0]
        toward = np.asarray(toward, dtype=float)
        if self.space.distance(self.center, toward) < 1e-14:
            return basis[0]
        v = self.space.log(self.center, toward)
        return v / self.space.norm(self.center, v)

    def radial_nodes(self, x0, scale: float, resolution: int = 64):
        x0 = np.asarray(x0, dtype=float)
        if isinstance(self.space, Warped2D):
            if np.any(x0 != 0):
                raise UnsupportedPairError("warped circle integrals need x0 at the pole")
            return np.array([self.radius]), np.array([self.area()])
        d = float(self.space.distance(self.center, x0))
        theta, wt = _zonal_theta(d, self.radius, self.space.kappa0, scale, resolution)
        rho = _zonal_distance(self.space, d, self.radius, theta)
        n = self.n
        s_r = float(sphere_radius(self.space.kappa0, self.radius))
        weights = sphere_area(n - 1) * s_r**n * np.sin(theta) ** (n - 1) * wt
        return rho, weights

    def sample(self, resolution: int = 64, toward=None, scale: float | None = None) -> SampleSet:
        """Zonal rings about the axis through ``toward``.

        Each sample stands for a ring of the sphere; integrands that are
        rotationally symmetric about that axis are integrated exactly up to
        the polar quadrature.
        """
        if resolution < 8:
            raise DomainError("resolution must be at least 8")
        space = self.space
        if isinstance(space, Warped2D):
            return self._warped_sample(resolution)
        R = self.radius
        k = space.kappa0
        e = self._axis(toward)
        basis = space.tangent_basis(self.center)
        others = [b - space.inner(self.center, b, e) * e for b in basis]
        # orthonormal complement of e
        comp = []
        for v in others:
            for c in comp:
                v = v - space.inner(self.center, v, c) * c
            nv = space.norm(self.center, v)
            if nv > 1e-8:
                comp.append(v / nv)
        f, rest = comp[0], comp[1:]
        d = float(space.distance(self.center, toward)) if toward is not None else 0.0
        if scale is None:
            theta, wt = np.polynomial.legendre.leggauss(resolution)
            theta = 0.5 * math.pi * (theta + 1.0)
            wt = 0.5 * math.pi * wt
        else:
            theta, wt = _zonal_theta(d, R, k, scale, resolution)
        w = np.cos(theta)[:, None] * e + np.sin(theta)[:, None] * f
        if isinstance(space, Hyperbolic):
            points = space.normalize(np.cosh(k * R) * self.center + np.sinh(k * R) / k * w)
            nu = k * np.sinh(k * R) * self.center + np.cosh(k * R) * w
        else:
            points = self.center + R * w
            nu = w
        t1 = -np.sin(theta)[:, None] * e + np.cos(theta)[:, None] * f
        tangents = np.stack([t1] + [np.broadcast_to(r, t1.shape) for r in rest], axis=1)
        n = self.n
        s_r = float(sphere_radius(k, R))
        weights = sphere_area(n - 1) * s_r**n * np.sin(theta) ** (n - 1) * wt
        hvec = -self.mean_curvature_magnitude() * nu
        return SampleSet(points, weights, tangents, nu[:, None, :], hvec)

    def _warped_sample(self, resolution):
        R = self.radius
        prof = self.space.profile
        theta = 2.0 * math.pi * np.arange(resolution) / resolution
        points = np.stack([np.full(resolution, R), theta], axis=1)
        weights = np.full(resolution, self.area() / resolution)
        nu = np.tile([1.0, 0.0], (resolution, 1))
        tang = np.tile([0.0, 1.0 / float(prof.phi(R))], (resolution, 1))
        hvec = -self.mean_curvature_magnitude() * nu
        return SampleSet(points, weights, tang[:, None, :], nu[:, None, :], hvec)

    def log_pole_integral(self, evaluator, tau: float) -> float:
        """``log`` of the kernel integral centered at the sphere center."""
        if isinstance(self.space, Warped2D):
            log_area = self.space.log_sphere_area(self.radius)
        else:
            log_area = math.log(sphere_area(self.n)) + self.n * float(
                log_sphere_radius(self.space.kappa0, self.radius))
        return float(evaluator.log_k(tau, self.radius)) + log_area

    def to_json(self):
        return {"variant": "sphere", "space": self.space.to_json(),
                "center": self.center.tolist(), "radius": self.radius}


# -- polylines -------------------------------------------------------------------------

def _segment_points(space: ModelSpace, a, u, lam):
    """Points ``exp_a(lam * u)``; ``a, u`` are ``(S, D)``, ``lam`` is ``(S, Q)``."""
    return space.exp(a[:, None, :], lam[..., None] * u[:, None, :])


def _adaptive_segment_nodes(space, a, b, lengths, x0, scale, base_nodes):
    """Kernel-adapted Gauss-Legendre nodes along geodesic segments ``a -> b``.

    Returns ``(points (M, D), weights (M,), segment_index (M,), lam (M,))``.
    """
    u = space.log(a, b)
    da = space.distance(x0, a)
    db = space.distance(x0, b)
    lower = np.minimum(da, db) - 0.5 * lengths
    near = lower < _NEAR_WIDTHS * scale
    sub = np.ones(len(lengths), dtype=int)
    sub[near] = np.clip(np.ceil(lengths[near] / (_PANEL_PER_WIDTH * scale)), 1, _MAX_SUBPANELS).astype(int)
    pts, wts, seg, lams = [], [], [], []
    for count in np.unique(sub):
        idx = np.nonzero(sub == count)[0]
        nodes = base_nodes if count == 1 else max(_SUBPANEL_NODES, 2)
        xg, wg = _gl(nodes)
        lam = ((np.arange(count)[:, None] + xg[None, :]) / count).ravel()
        wl = np.tile(wg / count, count)
        lam2 = np.broadcast_to(lam, (len(idx), lam.size))
        p = _segment_points(space, a[idx], u[idx], lam2)
        pts.append(p.reshape(-1, a.shape[-1]))
        wts.append((lengths[idx, None] * wl[None, :]).ravel())
        seg.append(np.repeat(idx, lam.size))
        lams.append(lam2.ravel())
    return np.concatenate(pts), np.concatenate(wts), np.concatenate(seg), np.concatenate(lams)


def _segments_cross(p, q, closed):
    """True if any two non-adjacent planar segments ``p[i] -> q[i]`` cross."""
    n = len(p)
    if n < 4:
        return False

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1)) if closed else np.ones(len(i), dtype=bool)
    i, j = i[keep], j[keep]
    a, b, c, d = p[i], q[i], p[j], q[j]
    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return bool(np.any((o1 * o2 < 0) & (o3 * o4 < 0)))


class PolylineCurve(Submanifold):
    """Polyline with geodesic segments, closed (cyclic) by default."""

    variant = "polyline"

    def __init__(self, space: ModelSpace, vertices, closed: bool = True):
        if isinstance(space, Warped2D):
            raise UnsupportedPairError("polylines need a space form (warped distances are pole-only)")
        v = space.normalize(np.asarray(vertices, dtype=float))
        if v.ndim != 2 or v.shape[1] != space.coord_dim:
            raise DomainError("vertex array has the wrong shape for this space")
        if len(v) < (3 if closed else 2):
            raise DegenerateGeometryError("too few vertices")
        self.space = space
        self.vertices = v
        self.closed = bool(closed)
        self.n = 1
        lengths = self.segment_lengths()
        if np.any(lengths < MIN_SEGMENT):
            raise DegenerateGeometryError("polyline segment shorter than 1e-10")

    def __repr__(self):
        return f"PolylineCurve({self.space!r}, {len(self.vertices)} vertices, closed={self.closed})"

    def __len__(self):
        return len(self.vertices)

    def _ends(self):
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]

    def segment_lengths(self) -> np.ndarray:
        a, b = self._ends()
        return self.space.distance(a, b)

    def area(self) -> float:
        return float(np.sum(self.segment_lengths()))

    length = area

    def spacing(self) -> float:
        return float(np.mean(self.segment_lengths()))

    def bounding_ball(self):
        center = self.space.mean_point(self.vertices)
        return center, float(np.max(self.space.distance(center, self.vertices)) + 0.5 * np.max(self.segment_lengths()))

    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(self.space.distance(v[:, None, :], v[None, :, :])))

    def radial_nodes(self, x0, scale: float, resolution: int = 64):
        a, b = self._ends()
        lengths = self.segment_lengths()
        base = max(2, math.ceil(resolution / len(lengths)))
        pts, w, _, _ = _adaptive_segment_nodes(self.space, a, b, lengths, np.asarray(x0, dtype=float),
                                               scale, base)
        return self.space.distance(x0, pts), w

    def refined_resolution(self, resolution: int) -> int:
        nseg = len(self.segment_lengths())
        return 2 * max(2, math.ceil(resolution / nseg)) * nseg

    def vertex_weights(self) -> np.ndarray:
        lengths = self.segment_lengths()
        if self.closed:
            return 0.5 * (lengths + np.roll(lengths, 1))
        w = np.zeros(len(self.vertices))
        w[:-1] += 0.5 * lengths
        w[1:] += 0.5 * lengths
        return w

    def _neighbour_logs(self):
        v = self.vertices
        sp = self.space
        if self.closed:
            nxt, prv = np.roll(v, -1, axis=0), np.roll(v, 1, axis=0)
        else:
            nxt = np.concatenate([v[1:], v[-2:-1]])
            prv = np.concatenate([v[1:2], v[:-1]])
        return sp.log(v, nxt), sp.log(v, prv)

    def tangents_normals(self):
        """Unit tangents and normals at the vertices (planar ambient only)."""
        sp = self.space
        if sp.dim != 2:
            raise UnsupportedPairError("vertex frames are implemented for curves in 2-D spaces")
        v = self.vertices
        up, um = self._neighbour_logs()
        lp = sp.norm(v, up)[:, None]
        lm = sp.norm(v, um)[:, None]
        tang = up / lp - um / lm
        if not self.closed:
            tang[0] = up[0] / lp[0]
            tang[-1] = -um[-1] / lm[-1]
        tang = tang / sp.norm(v, tang)[:, None]
        if isinstance(sp, Hyperbolic):
            # Lorentzian cross product: orthogonal to both x and the tangent
            c = np.cross(v, tang)
            c[:, 0] = -c[:, 0]
            normals = c / sp.norm(v, c)[:, None]
        else:
            normals = np.stack([-tang[:, 1], tang[:, 0]], axis=1)
        return tang, normals

    def curvature_vectors(self) -> np.ndarray:
        """Discrete mean curvature vectors at the vertices.

        ``2/(l+ + l-) (u+/l+ + u-/l-)`` with ``u`` the log-map vectors to the
        neighbours, projected to the normal; exactly ``1/R`` on regular
        Euclidean polygons.  Open ends are fixed (zero curvature).
        """
        sp = self.space
        v = self.vertices
        up, um = self._neighbour_logs()
        lp = sp.norm(v, up)[:, None]
        lm = sp.norm(v, um)[:, None]
        raw = 2.0 / (lp + lm) * (up / lp + um / lm)
        if sp.dim == 2:
            _, normals = self.tangents_normals()
            hvec = sp.inner(v, raw, normals)[:, None] * normals
        else:
            tang = up / lp - um / lm
            tang = tang / sp.norm(v, tang)[:, None]
            hvec = raw - sp.inner(v, raw, tang)[:, None] * tang
        if not self.closed:
            hvec[0] = 0.0
            hvec[-1] = 0.0
        return hvec

    def sample(self, resolution: int = 64, toward=None) -> SampleSet:
        """Vertex samples with trapezoid weights.

        The vertices are the discretization, so ``resolution`` only
        validates; kernel integrals use :meth:`radial_nodes` instead.
        """
        if resolution < 8:
            raise DomainError("resolution must be at least 8")
        tang, normals = self.tangents_normals()
        return SampleSet(self.vertices.copy(), self.vertex_weights(), tang[:, None, :],
                         normals[:, None, :], self.curvature_vectors())

    def resampled(self, count: int | None = None) -> "PolylineCurve":
        """Uniform-arclength reparameterization with the same vertex count."""
        count = len(self.vertices) if count is None else int(count)
        a, b = self._ends()
        lengths = self.segment_lengths()
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        total = cum[-1]
        if self.closed:
            targets = total * np.arange(count) / count
        else:
            targets = total * np.arange(count) / (count - 1)
        seg = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(lengths) - 1)
        frac = (targets - cum[seg]) / lengths[seg]
        u = self.space.log(a[seg], b[seg])
        pts = self.space.exp(a[seg], frac[:, None] * u)
        if not self.closed:
            pts[-1] = self.vertices[-1]
        return PolylineCurve(self.space, pts, self.closed)

    def planar_coordinates(self) -> np.ndarray:
        """Coordinates in which geodesic segments are straight (Klein model)."""
        if isinstance(self.space, Hyperbolic):
            return self.space.to_klein(self.vertices)
        return self.vertices

    def self_intersects(self) -> bool:
        if self.space.dim != 2:
            return False
        p = self.planar_coordinates()
        q = np.roll(p, -1, axis=0) if self.closed else p[1:]
        return _segments_cross(p if self.closed else p[:-1], q, self.closed)

    def to_json(self):
        return {"variant": "polyline", "space": self.space.to_json(),
                "vertices": self.vertices.tolist(), "closed": self.closed}


# -- surfaces of revolution ----------------------------------------------------------

class RevolutionSurface(Submanifold):
    """Surface obtained by rotating a profile polyline about an axis.

    The profile lives in the totally geodesic slice where the last spatial
    coordinate vanishes; its first spatial coordinate ``x1 >= 0`` measures
    distance to the axis (``x1 = sinh(kappa0 d)/kappa0`` in the hyperboloid).
    Rotation mixes the first and last spatial coordinates, and the orbit of
    a profile point has length ``2 pi x1``.  ``closed=False`` means the
    profile runs from the axis back to the axis (a topological sphere).
    """

    variant = "revolution"

    def __init__(self, space: ModelSpace, profile, closed: bool = False, angular_nodes: int = 64):
        if space.dim != 3 or isinstance(space, Warped2D):
            raise DomainError("surfaces of revolution live in a 3-D space form")
        prof = space.normalize(np.asarray(profile, dtype=float))
        self.space = space
        self.closed = bool(closed)
        self.n = 2
        self.angular_nodes = int(angular_nodes)
        self._r = space.coord_dim - 3
        self._rot = space.coord_dim - 1
        if np.any(np.abs(prof[:, self._rot]) > 1e-12):
            raise DomainError("profile must lie in the slice whose last coordinate is 0")
        if np.any(prof[:, self._r] < -1e-12):
            raise DomainError("profile must stay on the x1 >= 0 side of the axis")
        if not closed:
            prof[0, self._r] = 0.0
            prof[-1, self._r] = 0.0
        self.slice_space = Hyperbolic(2, space.kappa0) if isinstance(space, Hyperbolic) else Euclidean(2)
        self.profile = PolylineCurve(self.slice_space, self._to_slice(prof), closed=closed)

    def __repr__(self):
        return f"RevolutionSurface({self.space!r}, {len(self.profile)} profile vertices)"

    def _to_slice(self, pts):
        return np.asarray(pts)[..., :-1]

    def _from_slice(self, pts):
        pts = np.asarray(pts)
        return np.concatenate([pts, np.zeros(pts.shape[:-1] + (1,))], axis=-1)

    @property
    def vertices(self):
        return self._from_slice(self.profile.vertices)

    def with_profile(self, slice_vertices) -> "RevolutionSurface":
        return RevolutionSurface(self.space, self._from_slice(slice_vertices), self.closed, self.angular_nodes)

    def _on_axis(self, x0):
        x0 = np.asarray(x0, dtype=float)
        return abs(x0[self._r]) < 1e-12 and abs(x0[self._rot]) < 1e-12

    def _profile_nodes(self, x0_slice, scale, resolution):
        prof = self.profile
        a, b = prof._ends()
        lengths = prof.segment_lengths()
        base = max(2, math.ceil(resolution / len(lengths)))
        return _adaptive_segment_nodes(self.slice_space, a, b, lengths, x0_slice, scale, base)

    def refined_resolution(self, resolution: int) -> int:
        return self.profile.refined_resolution(resolution)

    def area(self) -> float:
        pts, w, _, _ = self._profile_nodes(self.slice_space.origin(), 1e300, 256)
        return float(np.sum(2.0 * math.pi * pts[:, self._r] * w))

    def spacing(self) -> float:
        return self.profile.spacing()

    def bounding_ball(self):
        center, radius = self.profile.bounding_ball()
        # project the center onto the axis so the ball stays symmetric
        center = np.array(center)
        center[self._r] = 0.0
        center = self.slice_space.normalize(center)
        radius = float(np.max(self.slice_space.distance(center, self.profile.vertices))) + self.spacing()
        return self._from_slice(center), radius

    def search_chart(self):
        center, radius = self.bounding_ball()
        axis = np.zeros(self.space.coord_dim)
        axis[self._r + 1] = 1.0
        axis = self.space.project(center, axis)
        axis = axis / self.space.norm(center, axis)
        return AxisChart(self.space, center, axis), radius

    def radial_nodes(self, x0, scale: float, resolution: int = 64):
        x0 = np.asarray(x0, dtype=float)
        if self._on_axis(x0):
            pts, w, _, _ = self._profile_nodes(self._to_slice(x0), scale, resolution)
            rho = self.space.distance(x0, self._from_slice(pts))
            return rho, 2.0 * math.pi * pts[:, self._r] * w
        # off-axis centers: uniform trapezoid in the rotation angle
        pts, w, _, _ = self._profile_nodes(self.slice_space.origin(), 1e300, resolution)
        m = max(self.angular_nodes, resolution // 4)
        ang = 2.0 * math.pi * np.arange(m) / m
        full = np.repeat(self._from_slice(pts)[:, None, :], m, axis=1)
        rad = full[..., self._r].copy()
        full[..., self._r] = rad * np.cos(ang)
        full[..., self._rot] = rad * np.sin(ang)
        rho = self.space.distance(x0, full).ravel()
        weights = (2.0 * math.pi * pts[:, self._r] * w)[:, None] / m * np.ones(m)
        return rho, weights.ravel()

    def curvature_vectors(self) -> np.ndarray:
        """Mean curvature vectors (in slice coordinates) at the profile vertices.

        Profile geodesic curvature plus the rotational term ``-nu_1/x1 nu``;
        on the axis the two principal curvatures agree, so ``H`` is twice the
        profile curvature computed with a mirrored ghost neighbour.
        """
        prof = self.profile
        sp = self.slice_space
        h_prof = prof.curvature_vectors()
        tang, normals = prof.tangents_normals()
        v = prof.vertices
        x1 = v[:, self._r]
        nu1 = normals[:, self._r]
        with np.errstate(divide="ignore", invalid="ignore"):
            rot = (-nu1 / x1)[:, None] * normals
        hvec = h_prof + rot
        if not self.closed:
            for end, nb in ((0, 1), (len(v) - 1, len(v) - 2)):
                ghost = v[nb].copy()
                ghost[self._r] = -ghost[self._r]
                ghost = sp.normalize(ghost)
                up, um = sp.log(v[end], v[nb]), sp.log(v[end], ghost)
                lp, lm = sp.norm(v[end], up), sp.norm(v[end], um)
                raw = 2.0 / (lp + lm) * (up / lp + um / lm)
                hvec[end] = 2.0 * raw
        return hvec

    def sample(self, resolution: int = 64, toward=None) -> SampleSet:
        """Profile-vertex rings; each weight is the ring's share of area."""
        if resolution < 8:
            raise DomainError("resolution must be at least 8")
        prof = self.profile
        w = 2.0 * math.pi * prof.vertices[:, self._r] * prof.vertex_weights()
        tang, normals = prof.tangents_normals()
        if not self.closed:
            # on the axis the surface is orthogonal to it: radial tangent, axial normal
            sp = self.slice_space
            for end in (0, len(w) - 1):
                v = prof.vertices[end]
                e_r = np.zeros_like(v)
                e_r[self._r] = 1.0
                e_a = np.zeros_like(v)
                e_a[self._r + 1] = 1.0
                t_end = sp.project(v, e_r) if isinstance(sp, Hyperbolic) else e_r
                n_end = sp.project(v, e_a) if isinstance(sp, Hyperbolic) else e_a
                n_end = n_end / sp.norm(v, n_end)
                tang[end] = t_end / sp.norm(v, t_end)
                normals[end] = n_end if sp.inner(v, n_end, normals[end]) >= 0 else -n_end
        rot = np.zeros((len(w), self.space.coord_dim))
        rot[:, self._rot] = 1.0
        tangents = np.stack([self._from_slice(tang), rot], axis=1)
        return SampleSet(self.vertices, w, tangents, self._from_slice(normals)[:, None, :],
                         self._from_slice(self.curvature_vectors()))

    def to_json(self):
        return {"variant": "revolution", "space": self.space.to_json(),
                "profile": self.vertices.tolist(), "closed": self.closed}


# -- unions -------------------------------------------------------------------------------

class UnionSubmanifold(Submanifold):
    """Disjoint union of submanifolds of a common dimension."""

    variant = "union"

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise DomainError("empty union")
        if len({p.n for p in parts}) != 1:
            raise DomainError("union parts must share the intrinsic dimension")
        self.parts = parts
        self.space = parts[0].space
        self.n = parts[0].n

    def area(self):
        return float(sum(p.area() for p in self.parts))

    def spacing(self):
        return min(p.spacing() for p in self.parts)

    def bounding_ball(self):
        centers = np.array([p.bounding_ball()[0] for p in self.parts])
        center = self.space.mean_point(centers)
        radius = max(float(self.space.distance(center, c)) + r
                     for c, r in (p.bounding_ball() for p in self.parts))
        return center, radius

    def radial_nodes(self, x0, scale, resolution=64):
        out = [p.radial_nodes(x0, scale, resolution) for p in self.parts]
        return np.concatenate([o[0] for o in out]), np.concatenate([o[1] for o in out])

    def sample(self, resolution=64, toward=None):
        s = [p.sample(resolution, toward) for p in self.parts]
        return SampleSet(*(np.concatenate([getattr(x, f) for x in s]) for f in
                           ("points", "weights", "tangents", "normals", "mean_curvature")))

    def to_json(self):
        return {"variant": "union", "parts": [p.to_json() for p in self.parts]}


# -- search charts ------------------------------------------------------------------------

@dataclass(frozen=True)
class FullChart:
    """Exponential coordinates about ``center`` on the whole ambient space."""

    space: ModelSpace
    center: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", self.space.dim)

    def point(self, y):
        return self.space.from_chart(self.center, np.asarray(y, dtype=float))


@dataclass(frozen=True)
class AxisChart:
    """Signed arclength along the geodesic through ``center`` in direction ``axis``.

    Used when symmetry confines the maximizer to an axis (spheres,
    surfaces of revolution).
    """

    space: ModelSpace
    center: np.ndarray
    axis: np.ndarray
    dim: int = 1

    def point(self, y):
        y = np.asarray(y, dtype=float).reshape(-1)
        return self.space.exp(self.center, y[0] * self.axis)


# -- functional interface -----------------------------------------------------------

def sample(S: Submanifold, resolution: int = 64) -> SampleSet:
    return S.sample(resolution)


def mean_curvature(S: Submanifold, at: int, resolution: int = 64) -> np.ndarray:
    return S.sample(resolution).mean_curvature[at]


def integrate_kernel(S: Submanifold, bk: BackwardsKernel, t: float, resolution: int = 64) -> float:
    """Quadrature of the backwards kernel over ``S`` at time ``t < t0``."""
    if bk.evaluator.n != S.n:
        raise DomainError("kernel dimension must equal the submanifold dimension")
    tau = bk.t0 - float(t)
    if not tau > 0:
        raise DomainError("backwards kernel is defined only for t < t0")
    rho, w = S.radial_nodes(bk.x0, math.sqrt(tau), resolution)
    return float(np.sum(w * bk.evaluator.k(tau, rho)))


def volume_in_ball(S: Submanifold, x1, R: float, resolution: int = 64) -> float:
    """Total weight of the samples within distance ``R`` of ``x1``."""
    s = S.sample(resolution, toward=x1)
    d = S.space.distance(np.asarray(x1, dtype=float), s.points)
    return float(np.sum(s.weights[d <= R]))
