import functools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import integrate as quadrature
from scipy import special

from ..asymptotics.IntegralEstimate import (
    DiagonalSpec,
    EstimateCase,
    SweepReport,
    SweepRow,
    closed_form_estimate,
    integral_norm_power,
    run_sweep,
)
from ..bodies.StarBody import Ball, StarBody
from ..bodies.SupportPolytope import SupportPolytope, ellipsoid_polytope
from ..sphere.SphereGrid import SphereGrid, integrate, sphere_area
from .DualMeasures import dual_entropy, dual_mixed_volume, min_radial, star_volume

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------- #
# Sphere constants

@functools.lru_cache(maxsize=None)
def half_sphere_moment(n: int, p: float) -> float:
    """ ∫_{u_1 > 0} u_1^p du on S^{n-1}, p > -1 """
    if not p > -1:
        raise ValueError(f"the moment diverges for p = {p}")
    return sphere_area(n - 1) * special.beta((p + 1) / 2, (n - 1) / 2) / 2


@functools.lru_cache(maxsize=None)
def log_inverse_coordinate_integral(n: int) -> float:
    """ ∫_{S^{n-1}} log(1/|u_1|) du, from the polar-angle integral on [0, π] """
    value, _ = quadrature.quad(
        lambda theta: -math.log(abs(math.cos(theta))) * math.sin(theta) ** (n - 2),
        0, math.pi, points=[math.pi / 2], limit=200)
    return sphere_area(n - 1) * value


# ---------------------------------------------------------------------- #
# Negative exponents

@dataclass(frozen=True)
class VolumeBounds:
    lower: float
    value: float
    upper: float
    min_radial: float

    @property
    def holds(self) -> bool:
        return self.lower <= self.value <= self.upper


def negative_q_volume_bounds(K: SupportPolytope, Q: StarBody, q: float,
                             grid: SphereGrid) -> VolumeBounds:

    """
    Two-sided bound on Ṽ_q(K, Q) for q < 0 in terms of r = min ρ_K:

      (1/n) (min ρ_Q)^{n-q} r^q ∫_{u_1>0} u_1^{-q} du
          <= Ṽ_q(K, Q) <= (1/n) (max ρ_Q)^{n-q} ω_{n-1} r^q

    r is the grid minimum, which can only overestimate the true minimum and
    so errs towards a smaller lower bound.
    """

    if not q < 0:
        raise ValueError(f"the bound is for q < 0, not q = {q}")
    n = K.dim
    r = min_radial(K, grid)
    low_Q, high_Q = Q.radial_bounds()
    value = dual_mixed_volume(K, Q, q, grid).value
    lower = low_Q ** (n - q) * r ** q * half_sphere_moment(n, -q) / n
    upper = high_Q ** (n - q) * sphere_area(n) * r ** q / n
    return VolumeBounds(lower=lower, value=value, upper=upper, min_radial=r)


# ---------------------------------------------------------------------- #
# Entropy

def entropy_upper_bound(K: SupportPolytope, Q: StarBody, grid: SphereGrid) -> float:

    """
    For even K with r = min ρ_K the body lies in the slab |ξ·u_0| <= r, which
    gives

      Ẽ(K, Q) <= Vol(Q) log r + (1/n)(max ρ_Q)^n ∫ log(1/|u_1|) du
                 - (1/n) ∫ ρ_Q^n log ρ_Q du
    """

    if not K.even:
        raise ValueError("the entropy bound needs an origin-symmetric polytope")
    n = K.dim
    r = min_radial(K, grid)
    _, high_Q = Q.radial_bounds()
    rho_Q = np.asarray(Q.radial(grid.nodes))
    self_entropy = integrate(grid, rho_Q ** n * np.log(rho_Q)) / n
    return (star_volume(Q, grid) * math.log(r)
            + high_Q ** n * log_inverse_coordinate_integral(n) / n
            - self_entropy)


def entropy_gap(K: SupportPolytope, Q: StarBody, grid: SphereGrid) -> float:
    """ entropy_upper_bound - Ẽ(K, Q); non-negative up to quadrature error """
    return entropy_upper_bound(K, Q, grid) - dual_entropy(K, Q, grid)


# ---------------------------------------------------------------------- #
# Ellipsoids

def ellipsoid_volume_estimate(semi_axes, q: float) -> tuple[float, EstimateCase]:
    """
    Comparison quantity for Ṽ_q(E, B) of the ellipsoid with semi-axes
    b_1 <= ... <= b_n, i.e. the closed form estimate of ∫|Au|^{-q} with
    A = diag(1/b_1, ..., 1/b_n).
    """
    semi_axes = np.sort(np.asarray(semi_axes, dtype=float))
    return closed_form_estimate(DiagonalSpec(tuple(1 / semi_axes)), q)


def ellipsoid_dual_volume(semi_axes, q: float, grid: SphereGrid) -> float:
    """ Ṽ_q(E, B) = (1/n) ∫ |Au|^{-q} du for the ellipsoid itself """
    semi_axes = np.sort(np.asarray(semi_axes, dtype=float))
    return integral_norm_power(DiagonalSpec(tuple(1 / semi_axes)), q, grid) / len(semi_axes)


def spread_semi_axes(n: int, spread: float, seed: int, index: int = 0) -> np.ndarray:
    """ b_1 = 1, b_n = spread, middle semi-axes log-uniform in between """
    rng = np.random.default_rng([seed, index, 1])
    middle = spread ** rng.uniform(0, 1, n - 2)
    return np.sort(np.concatenate([[1.0], middle, [float(spread)]]))


def ellipsoid_ratio_sweep(q: float, n: int, spreads: Sequence[float], grid: SphereGrid,
                          seed: int, normals: np.ndarray | None = None,
                          workers: int | None = None) -> SweepReport:

    """
    Ṽ_q(K, B) / ellipsoid_volume_estimate over a sweep of semi-axes, where
    K is the polytope circumscribed about the ellipsoid on the given
    normals (the grid nodes by default). The rows carry q in the alpha
    column.
    """

    if q <= 0:
        raise ValueError(f"the ellipsoid estimate is for q > 0, not {q}")
    normals = grid.nodes if normals is None else normals
    ball = Ball(n)

    def point(index, spread):
        semi_axes = spread_semi_axes(n, spread, seed, index)
        K = ellipsoid_polytope(semi_axes, normals)
        value = dual_mixed_volume(K, ball, q, grid).value
        estimate, _ = ellipsoid_volume_estimate(semi_axes, q)
        return SweepRow(q, n, float(spread), value, estimate, value / estimate)

    return run_sweep(spreads, point, workers)
