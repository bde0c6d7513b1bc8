"""Mean curvature flow of the shipped submanifolds, the Q term and the
monotonicity-identity residual, and the warped blossoming example."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CoincidentPointsError, DegenerateGeometryError, DomainError, SelfIntersectionError
from .geometry import Euclidean, Hyperbolic, ModelSpace, Warped2D, ct, blossom_profile
from .kernel import BackwardsKernel, KernelEvaluator
from .submanifold import GeodesicSphere, PolylineCurve, RevolutionSurface, Submanifold

__all__ = [
    "StepPolicy",
    "FlowTrace",
    "HuiskenCheck",
    "flow_sphere",
    "flow_polyline",
    "flow_revolution",
    "blossom_counterexample",
    "blossom_radius",
    "q_value",
    "q_terms",
    "huisken_identity_residual",
]


@dataclass(frozen=True)
class StepPolicy:
    """Time-stepping controls.

    ``dt_init`` is the nominal step (and the recording interval of the
    radius ODE), ``cfl`` scales the explicit-step guard
    ``dt <= cfl h_min^2 / (1 + max|H|)``.  ``record_dt`` spaces the states
    kept for polyline flows (every step when ``None``).  With ``coarsen``
    the vertex count is halved (down to ``min_vertices``) whenever the mean
    segment has shrunk to half its reference length, so the explicit step
    does not collapse as the curve shrinks toward a point.
    """

    dt_init: float = 1e-3
    cfl: float = 0.25
    t_end: float = math.inf
    resample: bool = True
    t_start: float = 0.0
    record_dt: float | None = None
    h_floor: float = 1e-4
    diameter_floor: float = 0.05
    check_every: int = 50
    rtol: float = 1e-12
    atol: float = 1e-14
    max_steps: int = 2_000_000
    coarsen: bool = True
    min_vertices: int = 32

    def __post_init__(self):
        if not 0 < self.cfl <= 0.5:
            raise DomainError("cfl must lie in (0, 0.5]")
        if not self.dt_init > 0:
            raise DomainError("dt_init must be positive")


@dataclass
class FlowTrace:
    space: ModelSpace
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    vanish: tuple | None = None
    status: str = "running"

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.states])

    def state_at(self, t: float):
        i = int(np.argmin(np.abs(self.times - t)))
        return self.states[i]


# -- exact radius ODEs ------------------------------------------------------------------

def _radius_ode(space: ModelSpace, n: int):
    """``(g(R), R(g), dg/dt)`` in a variable where the flow is simple.

    Flat space: ``g = R^2`` with ``g' = -2n``.  Hyperboloid:
    ``g = log cosh(kappa0 R)`` with ``g' = -n kappa0^2``.  Warped:
    ``g = R^2`` with ``g' = -2 R phi'(R)/phi(R)``.
    """
    if isinstance(space, Hyperbolic):
        k = space.kappa0

        def to_g(R):
            return math.log(math.cosh(k * R))

        def to_r(g):
            return (2.0 / k) * math.asinh(math.sqrt(max(math.expm1(g), 0.0) / 2.0))

        return to_g, to_r, lambda t, g: [-n * k * k]
    if isinstance(space, Warped2D):
        prof = space.profile

        def rhs(t, g):
            R = math.sqrt(max(g[0], 0.0))
            if R == 0.0:
                return [-2.0]
            return [-2.0 * R * float(prof.dphi(R)) / float(prof.phi(R))]

        return (lambda R: R * R), (lambda g: math.sqrt(max(g, 0.0))), rhs
    return (lambda R: R * R), (lambda g: math.sqrt(max(g, 0.0))), lambda t, g: [-2.0 * n]


def flow_sphere(space: ModelSpace, R0: float, policy: StepPolicy | None = None, center=None,
                extra_times=()) -> FlowTrace:
    """Shrinking geodesic sphere, integrated to the vanishing time.

    States are recorded every ``dt_init`` from ``t_start`` and at any
    ``extra_times`` inside the lifetime.
    """
    policy = policy or StepPolicy()
    if not R0 > 0:
        raise DomainError("initial radius must be positive")
    n = space.dim - 1
    to_g, to_r, rhs = _radius_ode(space, n)

    def hit_zero(t, g):
        return g[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    t0 = policy.t_start
    t_stop = t0 + 1e6 if math.isinf(policy.t_end) else policy.t_end
    sol = solve_ivp(rhs, (t0, t_stop), [to_g(R0)], method="DOP853", events=hit_zero,
                    rtol=policy.rtol, atol=policy.atol, dense_output=True)
    vanish_t = float(sol.t_events[0][0]) if len(sol.t_events[0]) else None
    t_last = vanish_t if vanish_t is not None else float(sol.t[-1])
    count = int(math.floor((t_last - t0) / policy.dt_init + 1e-9))
    times = t0 + policy.dt_init * np.arange(count + 1)
    times = np.union1d(times, [t for t in extra_times if t >= t0])
    if vanish_t is not None:
        # radii within ~1e-6 of the lifetime of vanishing are ODE roundoff
        times = times[times < t_last - 1e-6 * (t_last - t0)]
    else:
        times = times[times <= t_last]
    trace = FlowTrace(space)
    center = space.origin() if center is None else np.asarray(center, dtype=float)
    for t in times:
        R = to_r(float(sol.sol(t)[0]))
        if R <= 0:
            break
        S = GeodesicSphere(space, R, center)
        trace.states.append((float(t), S))
        trace.diagnostics.append({"t": float(t), "radius": R, "max_H": S.mean_curvature_magnitude(),
                                  "dt": policy.dt_init})
    if vanish_t is not None:
        trace.vanish = (vanish_t, center)
        trace.status = "vanished"
    else:
        trace.status = "t_end"
    return trace


def blossom_radius(t):
    """``R(t) = sqrt(tan(-2t))`` on ``(-pi/4, 0)``; ``nan`` elsewhere."""
    t = np.asarray(t, dtype=float)
    inside = (t > -0.25 * math.pi) & (t < 0)
    safe = np.where(inside, t, -0.1)
    return np.where(inside, np.sqrt(np.tan(-2.0 * safe)), np.nan)


# -- discrete flows -----------------------------------------------------------------------

def _vanish_estimate(space: ModelSpace, points, n: int):
    center = space.mean_point(points)
    r = float(np.mean(space.distance(center, points)))
    if isinstance(space, Hyperbolic):
        k = space.kappa0
        return math.log(math.cosh(k * r)) / (n * k * k), center
    return r * r / (2.0 * n), center


def _step_size(policy, hmin, hmax_curv, t, t_next):
    dt = min(policy.dt_init, policy.cfl * hmin * hmin / (1.0 + hmax_curv))
    return min(dt, t_next - t)


def _coarsened(policy, curve, reference):
    """``(curve, reference)`` after an optional halving of the vertex count."""
    count = len(curve.vertices)
    if not policy.coarsen or count // 2 < policy.min_vertices:
        return curve, reference
    if curve.spacing() >= 0.5 * reference:
        return curve, reference
    coarse = curve.resampled(count // 2 + (0 if curve.closed else 1))
    return coarse, coarse.spacing()


def flow_polyline(space: ModelSpace, S0: PolylineCurve, policy: StepPolicy | None = None) -> FlowTrace:
    """Discrete curve-shortening flow by explicit Euler steps.

    Vertices move by their full discrete curvature vector through the
    exponential map.  The flow stops at ``t_end``, when a segment drops
    below ``h_floor`` or the curve's extent drops below ``diameter_floor``;
    a detected self-intersection raises :class:`SelfIntersectionError`
    carrying the partial trace.
    """
    policy = policy or StepPolicy()
    if S0.self_intersects():
        raise DomainError("initial polyline is not embedded")
    trace = FlowTrace(space)
    S = S0
    t = policy.t_start
    trace.states.append((t, S))
    next_record = t + (policy.record_dt or 0.0)
    reference = S.spacing()
    step = 0
    while t < policy.t_end and step < policy.max_steps:
        H = S.curvature_vectors()
        hnorm = space.norm(S.vertices, H)
        lengths = S.segment_lengths()
        hmin = float(lengths.min())
        target = min(policy.t_end, next_record) if policy.record_dt else policy.t_end
        dt = _step_size(policy, hmin, float(hnorm.max()), t, target)
        try:
            S = PolylineCurve(space, space.exp(S.vertices, dt * H), S.closed)
        except DegenerateGeometryError:
            trace.status = "degenerate"
            break
        t += dt
        step += 1
        lengths = S.segment_lengths()
        if policy.resample and lengths.max() > 3.0 * lengths.min():
            S = S.resampled()
            lengths = S.segment_lengths()
        S, reference = _coarsened(policy, S, reference)
        lengths = S.segment_lengths()
        if step % policy.check_every == 0 and S.self_intersects():
            trace.status = "self-intersection"
            raise SelfIntersectionError("polyline self-intersected during the flow", time=t, state=trace)
        center = space.mean_point(S.vertices)
        extent = 2.0 * float(np.max(space.distance(center, S.vertices)))
        finished = lengths.min() < policy.h_floor or extent < policy.diameter_floor
        recorded = policy.record_dt is None or t >= next_record - 1e-14 or finished or t >= policy.t_end
        if recorded:
            trace.states.append((t, S))
            trace.diagnostics.append({"t": t, "max_H": float(hnorm.max()), "min_segment": float(lengths.min()),
                                      "dt": dt, "step": step})
            if policy.record_dt:
                while next_record <= t + 1e-14:
                    next_record += policy.record_dt
        if finished:
            tau, x_v = _vanish_estimate(space, S.vertices, 1)
            trace.vanish = (t + tau, x_v)
            trace.status = "vanished"
            break
    else:
        trace.status = "t_end"
    return trace


def flow_revolution(space: ModelSpace, S0: RevolutionSurface, policy: StepPolicy | None = None) -> FlowTrace:
    """Mean curvature flow of a surface of revolution through its profile.

    Profile vertices move by the full mean curvature (profile curvature plus
    the rotational term); vertices on the axis stay on it.  A profile
    vertex reaching the axis away from the ends stops the flow with status
    ``"axis-collision"`` (no surgery).
    """
    policy = policy or StepPolicy()
    trace = FlowTrace(space)
    S = S0
    t = policy.t_start
    trace.states.append((t, S))
    next_record = t + (policy.record_dt or 0.0)
    sp = S.slice_space
    ri = S._r
    reference = S.profile.spacing()
    step = 0
    while t < policy.t_end and step < policy.max_steps:
        H = S.curvature_vectors()
        v = S.profile.vertices
        hnorm = sp.norm(v, H)
        hmin = float(S.profile.segment_lengths().min())
        target = min(policy.t_end, next_record) if policy.record_dt else policy.t_end
        dt = _step_size(policy, hmin, float(hnorm.max()), t, target)
        new = sp.exp(v, dt * H)
        if not S.closed:
            new[0, ri] = 0.0
            new[-1, ri] = 0.0
            new = sp.normalize(new)
        interior = new[1:-1] if not S.closed else new
        if np.any(interior[:, ri] < policy.h_floor):
            trace.status = "axis-collision"
            trace.states.append((t, S))
            break
        try:
            S = S.with_profile(new)
        except DegenerateGeometryError:
            trace.status = "degenerate"
            break
        t += dt
        step += 1
        lengths = S.profile.segment_lengths()
        if policy.resample and lengths.max() > 3.0 * lengths.min():
            S = S.with_profile(S.profile.resampled().vertices)
            lengths = S.profile.segment_lengths()
        coarse, reference = _coarsened(policy, S.profile, reference)
        if coarse is not S.profile:
            S = S.with_profile(coarse.vertices)
            lengths = S.profile.segment_lengths()
        center = sp.mean_point(S.profile.vertices)
        extent = 2.0 * float(np.max(sp.distance(center, S.profile.vertices)))
        finished = lengths.min() < policy.h_floor or extent < policy.diameter_floor
        if policy.record_dt is None or t >= next_record - 1e-14 or finished or t >= policy.t_end:
            trace.states.append((t, S))
            trace.diagnostics.append({"t": t, "max_H": float(hnorm.max()), "min_segment": float(lengths.min()),
                                      "dt": dt, "step": step})
            if policy.record_dt:
                while next_record <= t + 1e-14:
                    next_record += policy.record_dt
        if finished:
            tau, x_v = _vanish_estimate(sp, S.profile.vertices, 2)
            trace.vanish = (t + tau, S._from_slice(x_v))
            trace.status = "vanished"
            break
    else:
        trace.status = "t_end"
    return trace


# -- the blossoming warped flow -------------------------------------------------------------

def blossom_counterexample(policy: StepPolicy | None = None, t0_values=(0.1, 0.5, 1.0),
                           kappas=(0.0, 1.0), times=None):
    """Circles ``R(t) = sqrt(tan(-2t))`` about the pole of the warped plane.

    The family is empty for ``t <= -pi/4`` and appears from infinity right
    after; each curve is a classical flow on its own interval.  Returns the
    integrated trace on ``[-pi/4 + 0.05, 0)`` and F-value rows for every
    ``(t, t0, kappa)``.  ``log_F`` is reported because ``F`` overflows
    as ``t -> -pi/4`` from above.
    """
    space = Warped2D(blossom_profile())
    t_start = -0.25 * math.pi + 0.05
    policy = policy or StepPolicy(dt_init=0.01)
    policy = replace(policy, t_start=t_start)
    if times is None:
        edge = -0.25 * math.pi
        times = [edge - 0.1, edge - 0.01, edge, edge + 1e-3, edge + 0.01, t_start,
                 -0.5, -0.4, -0.3, -0.2, -0.1, -0.05]
    trace = flow_sphere(space, float(blossom_radius(t_start)), policy, extra_times=times)
    flow_times = trace.times
    rows = []
    for t in times:
        R = float(blossom_radius(t))
        j = int(np.argmin(np.abs(flow_times - t))) if len(flow_times) else -1
        R_flow = trace.states[j][1].radius if j >= 0 and abs(flow_times[j] - t) < 1e-12 else float("nan")
        for t0 in t0_values:
            for kappa in kappas:
                if math.isnan(R):
                    log_f = -math.inf
                else:
                    ev = KernelEvaluator(1, kappa)
                    log_f = float(ev.log_k(t0 - t, R)) + float(space.log_sphere_area(R))
                rows.append({"t": float(t), "t0": float(t0), "kappa": float(kappa), "R_exact": R,
                             "R_flow": R_flow, "log_F": log_f,
                             "F": math.exp(log_f) if log_f < 700 else math.inf,
                             "empty": math.isnan(R)})
    return trace, rows


# -- Q term and the monotonicity identity -------------------------------------------------

def q_terms(space: ModelSpace, ev: KernelEvaluator, tau: float, x0, x, normals):
    """Vectorized ``Q`` at points ``x (N, D)`` with normals ``(N, k, D)``.

    ``Q = sum_i nabla^2 log Phi(E_i, E_i) + ((n - 1) ct_kappa(rho) - Delta rho) d_rho log Phi``
    over the normal vectors ``E_i``, with ``n`` the kernel dimension.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    normals = np.asarray(normals, dtype=float).reshape(len(x), -1, x.shape[-1])
    k = normals.shape[1]
    n = ev.n
    if n != space.dim - k:
        raise DomainError("kernel dimension must equal ambient dimension minus codimension")
    x0 = np.asarray(x0, dtype=float)
    rho = space.distance(x0, x)
    if np.any(np.asarray(rho) <= 0):
        raise CoincidentPointsError("Q is undefined at x = x0")
    first, second = ev.dlog_k(tau, rho)
    g = space.grad_rho(x0, x)
    q = np.zeros(len(x))
    for i in range(k):
        e = normals[:, i, :]
        d = space.inner(x, g, e)
        q += second * d * d + first * space.hessian_rho(x0, x, e)
    tail = -space.laplacian_rho(x0, x)
    if n > 1:
        tail = tail + (n - 1) * ct(ev.kappa, rho)
    return q + tail * first


def q_value(space: ModelSpace, kappa: float, bk: BackwardsKernel, t: float, x, normal_frame) -> float:
    """``Q`` at a single point with orthonormal normals ``normal_frame (k, D)``."""
    tau = bk.t0 - float(t)
    if not tau > 0:
        raise DomainError("Q is defined only for t < t0")
    ev = bk.evaluator if bk.evaluator.kappa == kappa else bk.evaluator.with_kappa(kappa)
    normals = np.asarray(normal_frame, dtype=float).reshape(1, -1, np.shape(x)[-1]) if np.size(normal_frame) \
        else np.zeros((1, 0, np.shape(x)[-1]))
    return float(q_terms(space, ev, tau, bk.x0, np.asarray(x, dtype=float)[None, :], normals)[0])


@dataclass(frozen=True)
class HuiskenCheck:
    residual: float
    lhs: float
    rhs: float
    t: float
    dt: float

    @property
    def relative(self) -> float:
        return abs(self.residual) / abs(self.rhs) if self.rhs else math.inf

    def __float__(self):
        return self.residual


def _drop_integrand(S: Submanifold, bk: BackwardsKernel, tau: float, resolution: int):
    if isinstance(S, GeodesicSphere):
        samples = S.sample(resolution, toward=bk.x0, scale=math.sqrt(tau))
    else:
        samples = S.sample(max(resolution, 8))
    space = S.space
    ev = bk.evaluator
    x = samples.points
    rho = space.distance(bk.x0, x)
    first, _ = ev.dlog_k(tau, rho)
    g = space.grad_rho(bk.x0, x)
    perp = np.zeros_like(x)
    for i in range(samples.normals.shape[1]):
        e = samples.normals[:, i, :]
        perp += space.inner(x, g, e)[:, None] * e
    diff = first[:, None] * perp - samples.mean_curvature
    term = space.inner(x, diff, diff)
    q = q_terms(space, ev, tau, bk.x0, x, samples.normals)
    return float(np.sum(samples.weights * (term + q) * ev.k(tau, rho)))


def huisken_identity_residual(trace: FlowTrace, bk: BackwardsKernel, t: float,
                              resolution: int = 256) -> HuiskenCheck:
    """``dF/dt + int (|d log K (nabla rho)^perp - H|^2 + Q) Phi`` at a state.

    ``dF/dt`` is the centered difference over the neighbouring states.
    """
    times = trace.times
    i = int(np.argmin(np.abs(times - t)))
    if i == 0 or i == len(times) - 1:
        raise DomainError("checkpoint too close to the ends of the trace")
    from .entropy import SpacetimeCenter, f_functional

    def F(j):
        tj, Sj = trace.states[j]
        return f_functional(Sj, bk.evaluator.kappa, SpacetimeCenter(bk.x0, bk.t0 - tj), resolution,
                            bk.evaluator.perturb)

    lhs = (F(i + 1) - F(i - 1)) / (times[i + 1] - times[i - 1])
    ti, Si = trace.states[i]
    rhs = -_drop_integrand(Si, bk, bk.t0 - ti, resolution)
    return HuiskenCheck(lhs - rhs, lhs, rhs, float(ti), float(0.5 * (times[i + 1] - times[i - 1])))
