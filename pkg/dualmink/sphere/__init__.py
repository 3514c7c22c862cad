from .SphereGrid import (
    GridKind,
    SphereGrid,
    ball_volume,
    build_grid,
    default_kind,
    default_resolution,
    integrate,
    integrate_binned,
    rank_of_atoms,
    sphere_area,
    unit,
)
