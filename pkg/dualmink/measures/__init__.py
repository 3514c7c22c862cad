from .DiscreteMeasure import (
    DiscreteMeasure,
    atom_errors,
    matching,
    total_variation_distance,
    uniform_measure,
)
from .DualMeasures import (
    DualVolumeValue,
    curvature_masses,
    dual_curvature_measure,
    dual_entropy,
    dual_mixed_volume,
    min_radial,
    node_terms,
    polytope_volume,
    star_volume,
)
from .Estimates import (
    VolumeBounds,
    ellipsoid_dual_volume,
    ellipsoid_ratio_sweep,
    ellipsoid_volume_estimate,
    entropy_gap,
    entropy_upper_bound,
    half_sphere_moment,
    log_inverse_coordinate_integral,
    negative_q_volume_bounds,
)
