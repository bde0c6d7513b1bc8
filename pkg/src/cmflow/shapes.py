"""Built-in shapes: round spheres, ellipse-like polylines, geodesic
segments, and profiles for surfaces of revolution."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .geometry import Euclidean, Hyperbolic, ModelSpace, Warped2D, blossom_profile, sinh_profile
from .submanifold import GeodesicSphere, PolylineCurve, RevolutionSurface

__all__ = [
    "space_by_name",
    "round_sphere",
    "ellipse",
    "geodesic_segment",
    "sphere_profile",
    "dumbbell_profile",
    "builtin",
    "BUILTIN_SHAPES",
]


def space_by_name(name: str) -> ModelSpace:
    """Parse ``R<m>``, ``H<m>`` or ``H<m>:<kappa0>``, ``warped`` or ``warped-sinh``."""
    key = name.strip()
    if key == "warped":
        return Warped2D(blossom_profile())
    if key == "warped-sinh":
        return Warped2D(sinh_profile(1.0))
    try:
        if key[0] in "RE":
            return Euclidean(int(key[1:]))
        if key[0] == "H":
            dim, _, k0 = key[1:].partition(":")
            return Hyperbolic(int(dim), float(k0) if k0 else 1.0)
    except (ValueError, IndexError):
        pass
    raise DomainError(f"unknown space {name!r}")


def _chart_points(space: ModelSpace, coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if isinstance(space, Euclidean):
        return coords
    return space.from_chart(space.origin(), coords)


def round_sphere(space: ModelSpace, radius: float = 1.0) -> GeodesicSphere:
    """Geodesic sphere (a circle in dimension 2) about the origin or pole."""
    return GeodesicSphere(space, radius)


def ellipse(space: ModelSpace, a: float = 1.0, b: float = 0.5, count: int = 128) -> PolylineCurve:
    """Closed polyline through ``(a cos s, b sin s)`` in exponential coordinates."""
    if space.dim != 2 or isinstance(space, Warped2D):
        raise DomainError("ellipses are built in a 2-D space form")
    s = 2.0 * math.pi * np.arange(count) / count
    return PolylineCurve(space, _chart_points(space, np.c_[a * np.cos(s), b * np.sin(s)]), closed=True)


def geodesic_segment(space: ModelSpace, half_length: float = 3.0, count: int = 61) -> PolylineCurve:
    """Open piece of the geodesic through the origin along the first axis."""
    if isinstance(space, Warped2D):
        raise DomainError("geodesic segments are built in a space form")
    s = np.linspace(-half_length, half_length, count)
    coords = np.zeros((count, space.dim))
    coords[:, 0] = s
    return PolylineCurve(space, _chart_points(space, coords), closed=False)


def _profile(space: ModelSpace, radial, axial) -> RevolutionSurface:
    if space.dim != 3 or isinstance(space, Warped2D):
        raise DomainError("surfaces of revolution are built in a 3-D space form")
    coords = np.c_[radial, axial, np.zeros_like(radial)]
    return RevolutionSurface(space, _chart_points(space, coords), closed=False)


def sphere_profile(space: ModelSpace, radius: float = 1.0, count: int = 65) -> RevolutionSurface:
    """Half great circle of a round sphere, rotated about the axis."""
    th = np.linspace(0.0, math.pi, count)
    return _profile(space, radius * np.sin(th), radius * np.cos(th))


def dumbbell_profile(space: ModelSpace, length: float = 2.0, neck: float = 0.25,
                     count: int = 81) -> RevolutionSurface:
    """Two bulbs joined by a thin neck of relative width ``neck``."""
    z = np.linspace(-length, length, count)
    u = z / length
    radial = np.sqrt(np.maximum(0.0, 1.0 - u * u)) * 0.5 * length * (neck + (1.0 - neck) * 4.0 * u * u)
    return _profile(space, radial, -z)


def builtin(name: str, space: ModelSpace | str | None = None, **params):
    """Construct a built-in shape by name.

    Names are ``circle`` and ``sphere`` (radius), ``ellipse`` (a, b, count),
    ``segment`` (half_length, count), ``sphere-profile`` (radius, count) and
    ``dumbbell`` (length, neck, count).
    """
    if name not in BUILTIN_SHAPES:
        raise DomainError(f"unknown shape {name!r}; choose from {sorted(BUILTIN_SHAPES)}")
    make, default_space = BUILTIN_SHAPES[name]
    if space is None:
        space = default_space
    if isinstance(space, str):
        space = space_by_name(space)
    try:
        return make(space, **params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name!r}: {exc}") from exc


BUILTIN_SHAPES = {
    "circle": (round_sphere, "R2"),
    "sphere": (round_sphere, "R3"),
    "ellipse": (ellipse, "H2"),
    "segment": (geodesic_segment, "H2"),
    "sphere-profile": (sphere_profile, "R3"),
    "dumbbell": (dumbbell_profile, "R3"),
}
