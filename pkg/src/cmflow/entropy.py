"""F-functional, entropy supremum over spacetime centers, and Gaussian
densities along flows."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from .errors import DomainError, InsufficientCheckpointsError
from .kernel import KernelEvaluator
from .submanifold import AxisChart, FullChart, Submanifold

__all__ = [
    "SpacetimeCenter",
    "SearchOptions",
    "EntropyResult",
    "DensityEstimate",
    "f_functional",
    "entropy_sup",
    "gaussian_density",
    "entropy_monotone_report",
    "neville_at_zero",
]


_PLATEAU_TOL = 1e-6


@lru_cache(maxsize=64)
def evaluator(n: int, kappa: float, perturb: float = 0.0) -> KernelEvaluator:
    """Shared evaluator per ``(n, kappa)``; evaluators are immutable."""
    return KernelEvaluator(n, kappa, perturb=perturb)


@dataclass(frozen=True)
class SpacetimeCenter:
    x0: np.ndarray
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError("backwards time tau must be positive")


@dataclass(frozen=True)
class SearchOptions:
    """Settings for :func:`entropy_sup`.

    ``margin`` inflates the bounding ball (absolute distance).  ``tau_min``
    and ``tau_max`` override the automatic range.  ``chart`` is ``"auto"``
    (symmetry-reduced axis chart for spheres and surfaces of revolution),
    ``"full"`` or ``"axis"``.
    """

    resolution: int = 256
    margin: float = 0.5
    grid_points: int = 5
    tau_points: int = 8
    seeds: int = 4
    maxiter: int = 200
    xatol: float = 1e-6
    fatol: float = 1e-13
    tau_min: float | None = None
    tau_max: float | None = None
    chart: str = "auto"
    estimate_error: bool = True
    jobs: int = 1


@dataclass
class EntropyResult:
    value: float
    argmax: SpacetimeCenter
    search_trace: list = field(default_factory=list)
    converged: bool = True
    error: float = float("nan")
    chart_coords: tuple = ()

    @property
    def evaluations(self) -> int:
        return len(self.search_trace)


@dataclass(frozen=True)
class DensityEstimate:
    value: float
    error: float
    taus: tuple
    values: tuple

    def __float__(self):
        return self.value


def f_functional(S: Submanifold, kappa: float, c: SpacetimeCenter, resolution: int = 256,
                 perturb: float = 0.0) -> float:
    """``int_S K_{n,kappa}(tau, dist(x, x0)) dVol(x)``."""
    ev = evaluator(S.n, float(kappa), perturb)
    rho, w = S.radial_nodes(c.x0, math.sqrt(c.tau), resolution)
    return float(np.sum(w * ev.k(c.tau, rho)))


def _tau_range(S: Submanifold, kappa: float, opts: SearchOptions):
    tau_min = opts.tau_min if opts.tau_min is not None else (0.05 * S.spacing()) ** 2
    if opts.tau_max is not None:
        return tau_min, opts.tau_max
    # beyond tau_max the crude bound |S| K(tau, 0) < 1 <= entropy rules out the sup
    ev = evaluator(S.n, float(kappa))
    log_area = math.log(S.area())

    def excess(log_tau):
        return log_area + float(ev.log_k(math.exp(log_tau), 0.0))

    lo, hi = math.log(tau_min), math.log(tau_min) + 1.0
    if excess(lo) <= 0:
        return tau_min, tau_min * 100.0
    while excess(hi) > 0:
        hi += 2.0
        if hi > 50:
            break
    tau_max = math.exp(optimize.brentq(excess, lo, hi, xtol=1e-10))
    return tau_min, max(tau_max, 100.0 * tau_min)


def _chart_for(S: Submanifold, opts: SearchOptions):
    chart, radius = S.search_chart()
    if opts.chart == "full" and not isinstance(chart, FullChart):
        chart = FullChart(S.space, chart.center)
    elif opts.chart == "axis" and not isinstance(chart, AxisChart):
        raise DomainError("no symmetry axis for this submanifold")
    return chart, radius


def _order_key(value, log_tau, y):
    return (-value, log_tau, tuple(np.round(y, 12)))


def entropy_sup(S: Submanifold, kappa: float, opts: SearchOptions | None = None,
                perturb: float = 0.0) -> EntropyResult:
    """Supremum of the F-functional over centers and scales.

    A product grid in (chart coordinates, log tau) seeds bounded
    Nelder-Mead refinements of the best few points.
    """
    opts = opts or SearchOptions()
    chart, radius = _chart_for(S, opts)
    reach = radius + opts.margin
    tau_min, tau_max = _tau_range(S, kappa, opts)
    lt_lo, lt_hi = math.log(tau_min), math.log(tau_max)
    dim = chart.dim
    res = opts.resolution
    trace = []

    def value(z):
        y = np.asarray(z[:dim], dtype=float)
        tau = math.exp(float(z[dim]))
        v = f_functional(S, kappa, SpacetimeCenter(chart.point(y), tau), res, perturb)
        trace.append((tuple(y.tolist()), tau, v))
        return v

    axes = [np.linspace(-reach, reach, opts.grid_points)] * dim
    if isinstance(chart, AxisChart) and S.variant == "sphere":
        axes = [np.linspace(0.0, reach, opts.grid_points)]
    taus = np.linspace(lt_lo, lt_hi, opts.tau_points)
    grid = [np.array(list(p)) for p in np.array(np.meshgrid(*axes, taus, indexing="ij")).reshape(dim + 1, -1).T]
    values = [value(z) for z in grid]
    order = sorted(range(len(grid)), key=lambda i: _order_key(values[i], grid[i][dim], grid[i][:dim]))
    seeds = [grid[i] for i in order[:opts.seeds]]

    lower = np.array([a[0] for a in axes] + [lt_lo])
    upper = np.array([a[-1] for a in axes] + [lt_hi])
    step = np.array([(a[-1] - a[0]) / max(len(a) - 1, 1) * 0.5 for a in axes]
                    + [(lt_hi - lt_lo) / max(opts.tau_points - 1, 1) * 0.5])

    def refine(z0):
        local = []

        def objective(z):
            y = np.asarray(z[:dim], dtype=float)
            tau = math.exp(float(z[dim]))
            v = f_functional(S, kappa, SpacetimeCenter(chart.point(y), tau), res, perturb)
            local.append((tuple(y.tolist()), tau, v))
            return -v

        simplex = [z0]
        for j in range(dim + 1):
            z = z0.copy()
            z[j] = z[j] + step[j] if z[j] + step[j] <= upper[j] else z[j] - step[j]
            simplex.append(z)
        out = optimize.minimize(objective, z0, method="Nelder-Mead",
                                bounds=list(zip(lower, upper)),
                                options={"maxiter": opts.maxiter, "xatol": opts.xatol,
                                         "fatol": opts.fatol, "initial_simplex": np.array(simplex)})
        return out, local

    if opts.jobs > 1:
        with ThreadPoolExecutor(opts.jobs) as pool:
            refined = list(pool.map(refine, seeds))
    else:
        refined = [refine(z) for z in seeds]
    candidates = []
    for out, local in refined:
        trace.extend(local)
        z = np.clip(out.x, lower, upper)
        candidates.append((-float(out.fun), z, bool(out.success) and out.nit < opts.maxiter))
    candidates.sort(key=lambda c: _order_key(c[0], c[1][dim], c[1][:dim]))
    best_value, best_z, ok = candidates[0]
    # the grid may still hold the best point if every refinement stalled
    gi = order[0]
    if values[gi] > best_value:
        best_value, best_z, ok = values[gi], grid[gi], False
    on_edge = bool(np.any(np.isclose(best_z, lower, atol=1e-6) & (lower != 0))
                   or np.any(np.isclose(best_z, upper, atol=1e-6)))
    y = best_z[:dim]
    tau = math.exp(float(best_z[dim]))
    center = SpacetimeCenter(chart.point(y), tau)
    error = float("nan")
    if opts.estimate_error:
        finer = f_functional(S, kappa, center, S.refined_resolution(res), perturb)
        error = abs(best_value - finer)
    # a sup of 1 is a limit (scales shrinking onto the submanifold), never attained
    attained = best_value > 1.0 + _PLATEAU_TOL
    return EntropyResult(best_value, center, trace, ok and not on_edge and attained, error, tuple(y.tolist()))


def neville_at_zero(xs, ys):
    """Value at ``x = 0`` of the interpolating polynomial (Neville's scheme)."""
    xs = np.asarray(xs, dtype=float)
    p = np.array(ys, dtype=float)
    n = len(xs)
    for k in range(1, n):
        p[: n - k] = (xs[k:] * p[: n - k] - xs[: n - k] * p[1: n - k + 1]) / (xs[k:] - xs[: n - k])
    return float(p[0])


def gaussian_density(trace, t0: float, x0, kappa: float, resolution: int = 256,
                     checkpoints: int = 4) -> DensityEstimate:
    """Limit of the F-functional centered at ``(t0, x0)`` as ``t -> t0``.

    Uses the ``checkpoints`` states closest to ``t0`` from below and
    extrapolates in ``tau = t0 - t`` to zero with a cubic (for four
    points).  The error estimate is the change when the farthest point is
    dropped.
    """
    states = [(t, S) for t, S in trace.states if t < t0]
    if len(states) < max(checkpoints, 2):
        raise InsufficientCheckpointsError(f"need {checkpoints} states before t0, have {len(states)}")
    states = states[-checkpoints:]
    taus = np.array([t0 - t for t, _ in states])[::-1]
    vals = np.array([f_functional(S, kappa, SpacetimeCenter(np.asarray(x0, dtype=float), t0 - t), resolution)
                     for t, S in states])[::-1]
    full = neville_at_zero(taus, vals)
    lower = neville_at_zero(taus[:-1], vals[:-1])
    return DensityEstimate(full, abs(full - lower), tuple(taus.tolist()), tuple(vals.tolist()))


def entropy_monotone_report(trace, kappa: float, checkpoints, opts: SearchOptions | None = None):
    """Entropy at each checkpoint with successive differences.

    Rows are dicts with ``t``, ``entropy``, ``error``, ``converged``,
    ``diff`` and ``increase`` (an increase beyond the combined error
    estimates).
    """
    opts = opts or SearchOptions()
    times = np.array([t for t, _ in trace.states])
    rows = []
    prev = None
    for tc in checkpoints:
        i = int(np.argmin(np.abs(times - tc)))
        t, S = trace.states[i]
        r = entropy_sup(S, kappa, opts)
        row = {"t": float(t), "entropy": r.value, "error": r.error, "converged": r.converged,
               "diff": float("nan"), "increase": False}
        if prev is not None:
            row["diff"] = r.value - prev["entropy"]
            tol = 3.0 * (np.nan_to_num(r.error) + np.nan_to_num(prev["error"]))
            row["increase"] = bool(row["diff"] > tol)
        rows.append(row)
        prev = row
    return rows
