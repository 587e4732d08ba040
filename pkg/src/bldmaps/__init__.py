"""Exact checks for BLD, Lipschitz quotient, radial and coradial maps between metric graphs."""

__version__ = "0.1.0"

from .graph import (
    Edge,
    GraphError,
    GraphPoint,
    MetricGraph,
    Segment,
    Subdivision,
    Walk,
    as_rational,
    build_graph,
    critical_radii,
    distance,
    geodesic,
    subdivide,
    walk_length,
)
from .region import Region, ball, boundary, components, sphere
from .graph_map import (
    GraphMap,
    NotBranchedCover,
    branch_set,
    build_map,
    connected_preimage_check,
    fiber,
    is_branched_cover,
    is_discrete,
    is_normal_domain,
    is_normal_neighbourhood,
    is_open,
    max_multiplicity,
    max_normal_radius,
    multiplicity,
    u_component,
    vaisala_decomposition,
)
from .checkers import (
    PropertyReport,
    characterize,
    check,
    check_bld,
    check_coradial,
    check_lipschitz,
    check_lq,
    check_lq_local,
    check_radial,
    check_radial_pointwise,
    local_indices,
    min_constant,
)
from .lifting import LiftError, all_maximal_lifts, fiber_transport, total_lift, verify_lift
from .convergence import (
    ConvergenceCertificate,
    MappingPackage,
    PointedSpace,
    QuasiIsometryWitness,
    bld_limit_harness,
    check_package_convergence,
    check_quasi_isometry,
    lq_limit_harness,
    min_qi_epsilon,
    search_quasi_isometry,
    winding_demo,
)
