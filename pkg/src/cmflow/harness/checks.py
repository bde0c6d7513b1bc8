"""Invariant checks on the kernels and the Q term, used by ``properties``.

Each check returns a dict ``{check, grid, worst_violation, pass, note}``.
``worst_violation`` is the signed extreme of the checked quantity (the
smallest margin for inequalities, the largest error for identities).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..flow import q_terms
from ..geometry import Hyperbolic
from ..kernel import (
    MAX_DIM,
    KernelEvaluator,
    descent_integral,
    dm_bound_ratio,
    millison_raise,
    normalization_integral,
)

__all__ = ["run_checks", "T_GRID", "R_GRID"]

T_GRID = np.geomspace(0.01, 20.0, 25)
R_GRID = np.concatenate([np.geomspace(1e-3, 0.1, 6)[:-1], np.linspace(0.1, 15.0, 40)])


def _result(check, grid, worst, ok, note=""):
    return {"check": check, "grid": grid, "worst_violation": float(worst), "pass": bool(ok), "note": note}


def _mesh():
    t, r = np.meshgrid(T_GRID, R_GRID, indexing="ij")
    return t.ravel(), r.ravel()


def check_normalization(dims, perturb, tol=1e-5):
    worst = 0.0
    grid = {"n": list(dims), "kappa": [0.0, 1.0, 2.0], "t": [0.1, 1.0, 10.0]}
    for n, kappa, t in itertools.product(dims, grid["kappa"], grid["t"]):
        ev = KernelEvaluator(n, kappa, perturb=perturb)
        worst = max(worst, abs(normalization_integral(ev, t) - 1.0))
    return _result("normalization", grid, worst, worst <= tol, f"|total heat - 1| <= {tol}")


def check_millison(dims, perturb, tol=1e-10):
    dims = [n for n in dims if n + 2 <= MAX_DIM]
    grid = {"n": list(dims), "kappa": [0.5, 1.0, 2.0], "t": [0.25, 1.0, 4.0], "r": [0.1, 0.5, 1.0, 3.0]}
    t, r = (a.ravel() for a in np.meshgrid(grid["t"], grid["r"], indexing="ij"))
    worst = 0.0
    for n, kappa in itertools.product(dims, grid["kappa"]):
        low = KernelEvaluator(n, kappa, perturb=perturb)
        high = KernelEvaluator(n + 2, kappa, perturb=perturb)
        raised = millison_raise(low, t, r)
        worst = max(worst, float(np.max(np.abs(raised / high.k(t, r) - 1.0))))
    return _result("millison", grid, worst, worst <= tol, f"relative error <= {tol}")


def check_descent(dims, perturb, tol=1e-5):
    dims = [n for n in dims if n + 1 <= MAX_DIM]
    grid = {"n": list(dims), "t": [0.25, 1.0, 4.0], "r": [0.0, 0.5, 1.0, 3.0], "kappa": 1.0}
    worst = 0.0
    for n in dims:
        high = KernelEvaluator(n + 1, 1.0, perturb=perturb)
        low = KernelEvaluator(n, 1.0, perturb=perturb)
        for t, r in itertools.product(grid["t"], grid["r"]):
            worst = max(worst, abs(descent_integral(high, t, r) / float(low.k(t, r)) - 1.0))
    return _result("descent", grid, worst, worst <= tol, f"relative error <= {tol}")


def check_superconvexity(dims, kappas, perturb, tol=1e-8, strict=1e-6):
    t, r = _mesh()
    worst = math.inf
    worst_strict = math.inf
    for n, kappa in itertools.product(dims, kappas):
        d = KernelEvaluator(n, kappa, perturb=perturb).defect(t, r)
        worst = min(worst, float(np.min(d)))
        if kappa == 1.0:
            worst_strict = min(worst_strict, float(np.min(d[r >= 0.1])))
    ok = worst >= -tol and (worst_strict > strict if math.isfinite(worst_strict) else True)
    grid = {"n": list(dims), "kappa": list(kappas), "t": [0.01, 20.0, len(T_GRID)],
            "r": [float(R_GRID[0]), 15.0, len(R_GRID)]}
    note = f"defect >= -{tol}; min over kappa=1, r>=0.1 is {worst_strict:.3e} (> {strict})"
    return _result("superconvexity", grid, worst, ok, note)


def check_kappa_comparison(dims, kappas, perturb, tol=1e-12):
    t, r = _mesh()
    ks = sorted(set(kappas))
    pairs = [(a, b) for a, b in itertools.combinations(ks, 2)]
    grid = {"n": list(dims), "pairs": pairs}
    worst = math.inf
    worst_eq = 0.0
    strict_dims = [n for n in dims if n >= 2]
    for n in dims:
        logs = {k: KernelEvaluator(n, k, perturb=perturb).log_k(t, r) for k in ks}
        for small, big in pairs:
            diff = logs[small] - logs[big]
            if n == 1:
                worst_eq = max(worst_eq, float(np.max(np.abs(diff))))
            else:
                worst = min(worst, float(np.min(diff)))
    notes = []
    ok = True
    if strict_dims:
        notes.append(f"strict (n={','.join(map(str, strict_dims))}): min log K_small - log K_big = {worst:.3e}")
        ok = ok and worst > 0
    if 1 in dims:
        notes.append(f"equality (n=1): max |log difference| = {worst_eq:.3e}")
        ok = ok and worst_eq <= tol
    value = worst if strict_dims else -worst_eq
    return _result("kappa_comparison", grid, value, ok, "; ".join(notes))


def check_decay_bounds(dims, perturb):
    t, r = _mesh()
    lo, hi = math.inf, 0.0
    for n in dims:
        ratio = dm_bound_ratio(KernelEvaluator(n + 1, 1.0, perturb=perturb), t, r)
        lo, hi = min(lo, float(np.min(ratio))), max(hi, float(np.max(ratio)))
    ok = math.isfinite(hi) and lo > 0
    return _result("decay_bounds", {"N": [n + 1 for n in dims], "kappa": 1.0}, lo, ok,
                   f"ratio envelope [{lo:.4g}, {hi:.4g}]")


def _random_frames(rng, space, x, k):
    frames = np.zeros((len(x), k, x.shape[1]))
    for i in range(len(x)):
        basis = space.tangent_basis(x[i])
        q, _ = np.linalg.qr(rng.normal(size=(space.dim, space.dim)))
        frames[i] = q[:, :k].T @ basis
    return frames


def check_q_positivity(draws, rng, perturb, tol=1e-9):
    worst = math.inf
    cases = []
    for m in (2, 3):
        space = Hyperbolic(m, 1.0)
        for k in range(0, min(2, m - 1) + 1):
            for kappa in (0.0, 0.5, 1.0):
                cases.append((space, k, kappa))
    per = max(1, draws // len(cases))
    for space, k, kappa in cases:
        ev = KernelEvaluator(space.dim - k, kappa, perturb=perturb)
        o = space.origin()
        x0 = space.from_chart(o, rng.normal(size=(per, space.dim)))
        x = space.from_chart(o, rng.normal(size=(per, space.dim)))
        tau = np.exp(rng.uniform(math.log(0.1), math.log(10.0), per))
        frames = _random_frames(rng, space, x, k)
        for i in range(per):
            q = q_terms(space, ev, float(tau[i]), x0[i], x[i:i + 1], frames[i:i + 1])
            worst = min(worst, float(q[0]))
    grid = {"spaces": ["H2(1)", "H3(1)"], "k": [0, 1, 2], "kappa": [0.0, 0.5, 1.0],
            "draws": per * len(cases)}
    return _result("q_positivity", grid, worst, worst >= -tol, f"Q >= -{tol}")


def run_checks(dims, kappas, perturb, q_draws, seed, tolerance=1e-8):
    """All kernel and Q checks in a fixed order."""
    rng = np.random.default_rng(seed)
    dims = sorted({int(n) for n in dims})
    kappas = sorted({float(k) for k in kappas})
    return [
        check_normalization(dims, perturb),
        check_millison(dims, perturb),
        check_descent(dims, perturb),
        check_superconvexity(dims, kappas, perturb, tol=tolerance),
        check_kappa_comparison(dims, kappas, perturb),
        check_decay_bounds(dims, perturb),
        check_q_positivity(q_draws, rng, perturb),
    ]
