from .Preconditions import (
    CheckStatus,
    Finding,
    HemisphereResult,
    HemisphereStatus,
    MassBalance,
    PreconditionReport,
    Regime,
    SubspaceMass,
    SubspaceMassCheck,
    SubspaceSup,
    check_even,
    check_mass_balance,
    check_subspace_mass_inequality,
    classify_slack,
    evaluate_preconditions,
    great_subsphere_concentrated,
    hemisphere_concentrated,
    regime_of,
    subspace_mass_sup,
)
