"""Entropy of geodesic circles and spheres in hyperbolic space.

Run with ``python3 demos/circle_entropy.py``.  Small spheres look
Euclidean, so their entropy approaches that of the round sphere; large
ones pick up curvature and their entropy grows.
"""

from cmflow.entropy import entropy_sup
from cmflow.geometry import Euclidean, Hyperbolic
from cmflow.kernel import sphere_entropy
from cmflow.submanifold import GeodesicSphere

print(f"Euclidean unit circle: {entropy_sup(GeodesicSphere(Euclidean(2), 1.0), 0.0).value:.8f}"
      f"  (closed form {sphere_entropy(1):.8f})")
print(f"Euclidean unit sphere: {entropy_sup(GeodesicSphere(Euclidean(3), 1.0), 0.0).value:.8f}"
      f"  (closed form {sphere_entropy(2):.8f})")

for m in (2, 3):
    H = Hyperbolic(m)
    print(f"\nGeodesic spheres in H{m}, entropy with kappa = 0, 0.5, 1 (round value {sphere_entropy(m - 1):.6f}):")
    for R in (0.05, 0.1, 0.5, 1.0, 2.0):
        S = GeodesicSphere(H, R)
        values = [entropy_sup(S, k) for k in (0.0, 0.5, 1.0)]
        cells = "  ".join(f"{v.value:.6f} (tau*={v.argmax.tau:.4g})" for v in values)
        print(f"  R={R:<5} {cells}")
