from .StarBody import Ball, Ellipsoid, RadialGrid, StarBody, minkowski_functional, radial_star
from .SupportPolytope import (
    BodyPoint,
    SupportPolytope,
    active_facets,
    cube,
    ellipsoid_polytope,
    facet_active,
    grid_polytope,
    nested_pair,
    radial_polytope,
    random_polytope,
    support_of_wulff,
    truncated_cube,
)
