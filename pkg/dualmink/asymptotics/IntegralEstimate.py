import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from ..config import tolerances
from ..errors import DimensionMismatchError
from ..sphere.SphereGrid import SphereGrid, integrate

logger = logging.getLogger(__name__)


class EstimateKind(str, Enum):
    ALPHA_GE_N = "alpha_ge_n"
    NONINTEGER_LT_N = "noninteger_lt_n"
    INTEGER_LT_N = "integer_lt_n"


@dataclass(frozen=True)
class DiagonalSpec:

    """
    A positive diagonal matrix diag(s_1, ..., s_m) with s_1 >= ... >= s_m.
    Orthogonal conjugation does not change ∫|Ax|^{-α}, so only diagonal
    matrices are accepted; callers rotate coordinates first.
    """

    entries: tuple[float, ...]

    def __post_init__(self):
        entries = tuple(float(s) for s in self.entries)
        if len(entries) < 1:
            raise ValueError("a diagonal spec needs at least one entry")
        if not all(s > 0 and math.isfinite(s) for s in entries):
            raise ValueError(f"diagonal entries must be finite and positive, got {entries}")
        if any(a < b for a, b in zip(entries, entries[1:])):
            raise ValueError(f"diagonal entries must be sorted descending, got {entries}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def sorted(cls, entries) -> "DiagonalSpec":
        return cls(tuple(sorted((float(s) for s in entries), reverse=True)))

    @classmethod
    def identity(cls, m: int) -> "DiagonalSpec":
        return cls((1.0,) * m)

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.entries)

    @property
    def det(self) -> float:
        return math.prod(self.entries)

    def inverse(self) -> "DiagonalSpec":
        return DiagonalSpec(tuple(1 / s for s in reversed(self.entries)))

    def power(self, t: float) -> np.ndarray:
        return self.array ** t

    def scaled(self, factor: float) -> "DiagonalSpec":
        return DiagonalSpec(tuple(factor * s for s in self.entries))

    def top(self, count: int) -> "DiagonalSpec":
        """ The block of the count largest entries """
        return DiagonalSpec(self.entries[:count])


@dataclass(frozen=True)
class EstimateCase:
    case: EstimateKind
    ceil_alpha: int
    floor_beta: int


# ---------------------------------------------------------------------- #
# Integrals

def _check_grid(A: DiagonalSpec, grid: SphereGrid):
    if grid.dim != A.m:
        raise DimensionMismatchError(f"diagonal has {A.m} entries, grid lives on S^{grid.dim - 1}")


def _norm_power(A: DiagonalSpec, alpha: float, grid: SphereGrid, pullback: bool) -> float:

    """
    ∫_{S^{m-1}} |Ax|^{-α} dx for any real α.

    With pullback the nodes are pushed through y -> A^{-t}y / |A^{-t}y|,
    t = α/m, and the Jacobian det(A)^{-t} |A^{-t}y|^{-m} is folded into the
    integrand, which becomes det(A)^{-t} |A^{1-t}y|^{-α} |A^{-t}y|^{α-m}.
    This flattens the peak of |Ax|^{-α} along the smallest axes, so strongly
    anisotropic A stay resolved at fixed resolution.
    """

    nodes = grid.nodes
    if not pullback:
        return integrate(grid, np.linalg.norm(nodes * A.array, axis=1) ** -alpha)

    t = alpha / A.m
    outer = np.linalg.norm(nodes * A.power(1 - t), axis=1)
    inner = np.linalg.norm(nodes * A.power(-t), axis=1)
    jacobian = A.det ** -t
    return jacobian * integrate(grid, outer ** -alpha * inner ** (alpha - A.m))


def integral_norm_power(A: DiagonalSpec, alpha: float, grid: SphereGrid,
                        pullback: bool = True) -> float:
    """ ∫_{S^{m-1}} |Ax|^{-α} dx for α > 0 """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, not {alpha}")
    _check_grid(A, grid)
    return _norm_power(A, alpha, grid, pullback)


def estimate_case(m: int, alpha: float) -> EstimateCase:
    floor = math.floor(alpha)
    if alpha >= m:
        kind = EstimateKind.ALPHA_GE_N
    elif float(alpha).is_integer():
        kind = EstimateKind.INTEGER_LT_N
    else:
        kind = EstimateKind.NONINTEGER_LT_N
    return EstimateCase(case=kind, ceil_alpha=math.ceil(alpha), floor_beta=floor)


def closed_form_estimate(A: DiagonalSpec, alpha: float) -> tuple[float, EstimateCase]:

    """
    The comparison quantity for ∫|Ax|^{-α}: it agrees with the integral up
    to factors bounded above and below in terms of m and α only.

      α >= m               1 / (s_1 ⋯ s_m · s_m^{α-m})
      α < m, non-integer   1 / (s_1 ⋯ s_k · s_k^{α-k}),  k = ⌈α⌉
      α < m, integer       (1 + log(s_α / s_{α+1})) / (s_1 ⋯ s_α)
    """

    if not alpha > 0:
        raise ValueError(f"alpha must be positive, not {alpha}")
    case = estimate_case(A.m, alpha)
    s = A.entries

    if case.case is EstimateKind.ALPHA_GE_N:
        value = 1 / (math.prod(s) * s[-1] ** (alpha - A.m))
    elif case.case is EstimateKind.NONINTEGER_LT_N:
        k = case.ceil_alpha
        value = 1 / (math.prod(s[:k]) * s[k - 1] ** (alpha - k))
    else:
        k = int(alpha)
        value = (1 + math.log(s[k - 1] / s[k])) / math.prod(s[:k])
    return value, case


# ---------------------------------------------------------------------- #
# Identities

class SidePair(NamedTuple):
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def power_reduce_check(B: DiagonalSpec, gamma: float, grid: SphereGrid,
                       pullback: bool = True) -> SidePair:
    """
    Both sides of ∫|Bx|^{-γ} dx = (1/det B) ∫|B^{-1}x|^{-(m-γ)} dx on one grid.
    The identity is a change of variables on the sphere and holds for every
    real γ, including 0 and negative values.
    """
    if not math.isfinite(gamma):
        raise ValueError(f"gamma must be finite, not {gamma}")
    _check_grid(B, grid)
    lhs = _norm_power(B, gamma, grid, pullback)
    rhs = _norm_power(B.inverse(), B.m - gamma, grid, pullback) / B.det
    return SidePair(lhs, rhs)


def dimension_reduce_check(B: DiagonalSpec, beta: float, grid_m: SphereGrid,
                           grid_l: SphereGrid | None = None) -> SidePair:

    """
    ∫_{S^{m-1}} |Bx|^{-β} against ∫_{S^{l-1}} |B_l y|^{-β} where B_l keeps the
    l = 1 + ⌊β⌋ largest entries. The two sides agree up to bounded factors.
    For l = 1 the sphere S^0 = {±1} is summed exactly and grid_l is unused.
    """

    if not 0 < beta < B.m:
        raise ValueError(f"beta must lie in (0, {B.m}), not {beta}")
    l = 1 + math.floor(beta)
    lhs = integral_norm_power(B, beta, grid_m)
    if l == 1:
        return SidePair(lhs, 2 * B.entries[0] ** -beta)
    if grid_l is None or grid_l.dim != l:
        raise DimensionMismatchError(f"the reduced side needs a grid on S^{l - 1}")
    return SidePair(lhs, integral_norm_power(B.top(l), beta, grid_l))


# ---------------------------------------------------------------------- #
# Sweeps

@dataclass(frozen=True)
class SweepRow:
    alpha: float
    m: int
    spread: float
    integral: float
    estimate: float
    ratio: float

    def as_row(self) -> list:
        return [self.alpha, self.m, self.spread, self.integral, self.estimate, self.ratio]


SWEEP_COLUMNS = ["alpha", "m", "spread", "integral", "estimate", "ratio"]


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)

    @property
    def min_ratio(self) -> float:
        return min(row.ratio for row in self.rows)

    @property
    def max_ratio(self) -> float:
        return max(row.ratio for row in self.rows)

    @property
    def band(self) -> float:
        """ max ratio / min ratio over the sweep """
        return self.max_ratio / self.min_ratio

    def to_document(self) -> dict:
        return {
            "schema": "dualmink.sweep/1",
            "columns": SWEEP_COLUMNS,
            "rows": [row.as_row() for row in self.rows],
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "band": self.band,
        }


def spread_diagonal(m: int, spread: float, seed: int, index: int = 0) -> DiagonalSpec:
    """
    Sorted entries with s_1 = spread and s_m = 1; the middle entries are
    log-uniform in [1, spread], drawn from (seed, index).
    """
    if not 1 <= spread <= tolerances.MAX_SPREAD:
        raise ValueError(f"spread must lie in [1, {tolerances.MAX_SPREAD:g}], not {spread}")
    if m < 2:
        raise ValueError(f"sweeps need m >= 2, not {m}")
    rng = np.random.default_rng([seed, index])
    middle = spread ** rng.uniform(0, 1, m - 2)
    return DiagonalSpec.sorted([spread, *middle, 1.0])


def run_sweep(spreads: Sequence[float], point, workers: int | None) -> SweepReport:
    spreads = list(spreads)
    if not spreads:
        raise ValueError("a sweep needs at least one spread")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(point, range(len(spreads)), spreads))
    report = SweepReport(rows)
    logger.info("sweep over %d spreads: ratio band [%.4g, %.4g]",
                len(rows), report.min_ratio, report.max_ratio)
    return report


def ratio_sweep(alpha: float, m: int, spreads: Sequence[float], grid: SphereGrid,
                seed: int, workers: int | None = None) -> SweepReport:
    """ integral_norm_power / closed_form_estimate over diagonals of the given spreads """

    def point(index, spread):
        A = spread_diagonal(m, spread, seed, index)
        integral = integral_norm_power(A, alpha, grid)
        estimate, _ = closed_form_estimate(A, alpha)
        return SweepRow(alpha, m, float(spread), integral, estimate, integral / estimate)

    return run_sweep(spreads, point, workers)


def dimension_reduce_sweep(beta: float, m: int, spreads: Sequence[float], grid_m: SphereGrid,
                           grid_l: SphereGrid | None, seed: int,
                           workers: int | None = None) -> SweepReport:
    """ Full-sphere side / reduced side of dimension_reduce_check over a sweep """

    def point(index, spread):
        B = spread_diagonal(m, spread, seed, index)
        pair = dimension_reduce_check(B, beta, grid_m, grid_l)
        return SweepRow(beta, m, float(spread), pair.lhs, pair.rhs, pair.ratio)

    return run_sweep(spreads, point, workers)
