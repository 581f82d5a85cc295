"""Robust reviewer assignment under affinity-score uncertainty.

Given an uncertainty set of plausible affinity-score matrices and the usual
assignment constraints (per-paper demands, reviewer caps, conflicts), this
package computes assignments maximizing worst-case utilitarian welfare:
exactly for singleton/box/sphere sets, and by supergradient ascent plus
dependent randomized rounding for ellipsoidal and polytope sets.
"""

from .adversary import (
    AdversaryResult,
    adversary,
    adversary_box,
    adversary_ellipsoid,
    adversary_sphere,
    adversary_vertices,
)
from .core import (
    AffinityMatrix,
    Assignment,
    AssignmentConstraints,
    FeasibilityReport,
    assignment_violations,
    check_assignment,
    usw,
    validate_instance,
)
from .flowassign import solve_box, solve_known, solve_sphere
from .projection import project_col, project_polytope, project_row
from .rounding import RoundingConfig, round_assignment, rounding_deviation
from .rra import (
    RRAConfig,
    RRAResult,
    budgeted_config,
    gradient_bound,
    rra_solve,
    sandwich_check,
)
from .uncertainty import (
    Box,
    Ellipsoid,
    ProbabilityRatios,
    SampledErrorEstimate,
    Singleton,
    Sphere,
    UncertaintySet,
    VertexPolytope,
    build_gaussian_ellipsoid,
    build_inductive_ellipsoid,
    build_transductive_ellipsoid,
    chi2_inverse,
    chi2_upper_bound,
    contains,
    expand_l1,
    intersect,
    l1_diameter_bound,
    sample_members,
)

__version__ = "0.1.0"
