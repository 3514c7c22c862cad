from .IntegralEstimate import (
    SWEEP_COLUMNS,
    DiagonalSpec,
    EstimateCase,
    EstimateKind,
    SidePair,
    SweepReport,
    SweepRow,
    closed_form_estimate,
    dimension_reduce_check,
    dimension_reduce_sweep,
    integral_norm_power,
    power_reduce_check,
    ratio_sweep,
    run_sweep,
    spread_diagonal,
)
