"""A flow where entropy monotonicity fails without a curvature bound.

Run with ``python3 demos/blossoming_flow.py``.  On a warped plane whose
curvature is unbounded below near the pole, a circle appears out of
nothing at t = -pi/4 and then shrinks.  The F-functional jumps from 0 to a
positive value at birth, so it cannot be non-increasing across that time.
"""

import math

from cmflow.flow import blossom_counterexample

trace, rows = blossom_counterexample()
print("radius check (flow vs sqrt(tan(-2t))):")
for t, S in trace.states[::150]:
    exact = math.sqrt(math.tan(-2 * t)) if -math.pi / 4 < t < 0 else float("nan")
    print(f"  t={t:+.4f}  R={S.radius:.8f}  exact={exact:.8f}")

print("\nF-functional with kernel center (0, x0) at t0 = 0.1, kappa = 0:")
for row in rows:
    if row["t0"] == 0.1 and row["kappa"] == 0.0:
        print(f"  t={row['t']:+.4f}  F={row['F']:.6g}{'  (empty)' if row['empty'] else ''}")
