"""Heat kernels of space forms, kappa-entropy of discretized submanifolds,
and mean curvature flow with the monotonicity checks built on them."""

from .entropy import (
    DensityEstimate,
    EntropyResult,
    SearchOptions,
    SpacetimeCenter,
    entropy_monotone_report,
    entropy_sup,
    f_functional,
    gaussian_density,
)
from .errors import (
    CmflowError,
    CoincidentPointsError,
    DegenerateGeometryError,
    DomainError,
    InsufficientCheckpointsError,
    QuadratureError,
    SelfIntersectionError,
    UnsupportedDimensionError,
    UnsupportedPairError,
)
from .flow import (
    FlowTrace,
    HuiskenCheck,
    StepPolicy,
    blossom_counterexample,
    flow_polyline,
    flow_revolution,
    flow_sphere,
    huisken_identity_residual,
    q_value,
)
from .geometry import Euclidean, Hyperbolic, ModelSpace, Warped2D, ct, f_kappa, blossom_profile, sinh_profile
from .kernel import (
    BackwardsKernel,
    KernelEvaluator,
    QuadraturePolicy,
    descent_integral,
    dm_bound_ratio,
    eval_dlog_k,
    eval_k,
    eval_log_k,
    eval_phi,
    millison_raise,
    normalization_integral,
    sphere_entropy,
    superconvexity_defect,
)
from .shapes import builtin
from .submanifold import (
    GeodesicSphere,
    PolylineCurve,
    RevolutionSurface,
    UnionSubmanifold,
    integrate_kernel,
    mean_curvature,
    sample,
    volume_in_ball,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
