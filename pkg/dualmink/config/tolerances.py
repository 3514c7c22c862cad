# Tolerance ledger. Every function that compares floats takes its
# tolerance as a keyword argument defaulting to one of these.

NODE_NORM = 1e-12
GRID_RELATIVE = 1e-3
ODD_CANCELLATION = 1e-12

DISTINCT_ANGLE = 1e-8
SUBSPACE_MEMBERSHIP = 1e-8
RANK_THRESHOLD = 1e-10
EVEN_WEIGHTS = 1e-12
MATCHING = 1e-8

ROTATION_ORTHOGONALITY = 1e-10
STAR_EVENNESS = 1e-10

# best margin max_v min_i v·x_i: at or above the witness margin the atoms lie
# in a closed hemisphere, at or below the reject level they do not, and in
# between the answer is indeterminate
HEMISPHERE_WITNESS_MARGIN = 1e-10
HEMISPHERE_REJECT = -1e-6

SLACK_REFUSAL = 1e-9
MASS_BALANCE = 1e-3

# subset enumeration budget for the exact subspace mass check
MAX_ATOMS = 64
MAX_SUBSETS = 2_000_000

# sweeps of ∫|Ax|^{-α} cap the condition number at default resolution
MAX_SPREAD = 1e4

GOLDEN_STEPS = 32
