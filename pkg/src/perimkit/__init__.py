"""Sets of finite perimeter, indecomposable components and BV extreme points
on exactly computable discrete models."""

from .space_model import (
    BallIndex,
    Cell,
    Geometry,
    InterfaceAtom,
    ModelError,
    SpaceModel,
    audit_condition_1_4,
    audit_isotropy,
    audit_pi_constants,
    ball,
    build_from_string,
    build_grid,
    build_metric_graph,
    build_path,
    build_sierpinski_carpet,
    build_star,
    build_strip,
    load_model,
    oracle_ramp_relaxation,
    save_model,
)
from .bv_core import (
    AtomSet,
    UnsupportedModel,
    BVFunction,
    CellSet,
    coarea_decompose,
    essential_boundary,
    essential_interior,
    half_density_set,
    perimeter,
    simple_approximation,
    theta_map,
    tv,
    tv_via_divergence,
)
from .decomposition import (
    CapExceeded,
    ahlfors_unique_infinite_component,
    check_liouville_equivalence,
    decompose,
    holes,
    is_additive_split,
    is_indecomposable,
    is_saturated,
    is_simple,
    saturate,
    xi_sigma_algebra,
)
from .extreme_points import build_instance, compare, enumerate_vertices, predict_vertices

__all__ = [
    "AtomSet",
    "BVFunction",
    "BallIndex",
    "CapExceeded",
    "Cell",
    "CellSet",
    "Geometry",
    "InterfaceAtom",
    "ModelError",
    "SpaceModel",
    "UnsupportedModel",
    "ahlfors_unique_infinite_component",
    "audit_condition_1_4",
    "audit_isotropy",
    "audit_pi_constants",
    "ball",
    "build_from_string",
    "build_grid",
    "build_instance",
    "build_metric_graph",
    "build_path",
    "build_sierpinski_carpet",
    "build_star",
    "build_strip",
    "check_liouville_equivalence",
    "coarea_decompose",
    "compare",
    "decompose",
    "enumerate_vertices",
    "essential_boundary",
    "essential_interior",
    "half_density_set",
    "holes",
    "is_additive_split",
    "is_indecomposable",
    "is_saturated",
    "is_simple",
    "load_model",
    "oracle_ramp_relaxation",
    "perimeter",
    "predict_vertices",
    "saturate",
    "save_model",
    "simple_approximation",
    "theta_map",
    "tv",
    "tv_via_divergence",
    "xi_sigma_algebra",
]

__version__ = "0.1.0"
