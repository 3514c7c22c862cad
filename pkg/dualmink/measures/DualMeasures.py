import logging
from dataclasses import dataclass

import numpy as np

from ..bodies.StarBody import Ball, StarBody
from ..bodies.SupportPolytope import SupportPolytope
from ..errors import DimensionMismatchError
from ..sphere.SphereGrid import SphereGrid, integrate, integrate_binned
from .DiscreteMeasure import DiscreteMeasure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DualVolumeValue:

    """ Ṽ_q(K, Q) together with the exponent and the grid it was computed on """

    value: float
    q: float
    grid: dict

    def __float__(self) -> float:
        return self.value


def _check_dims(K: SupportPolytope, Q: StarBody, grid: SphereGrid):
    if not K.dim == Q.dim == grid.dim:
        raise DimensionMismatchError(
            f"polytope in R^{K.dim}, star body in R^{Q.dim}, grid on S^{grid.dim - 1}")


def node_terms(K: SupportPolytope, Q: StarBody, q: float,
               grid: SphereGrid) -> tuple[np.ndarray, np.ndarray]:

    """
    The per-node integrand (1/n) ρ_K^q ρ_Q^{n-q} and the facet each node
    bins to under the radial map of K. Every dual quantity of a polytope
    is a weighted sum of these terms, so they are computed once.
    """

    _check_dims(K, Q, grid)
    n = K.dim
    rho_K, facets = K.radial_map(grid.nodes)
    rho_Q = np.asarray(Q.radial(grid.nodes))
    if q == n:
        terms = rho_K ** n / n
    else:
        terms = rho_K ** q * rho_Q ** (n - q) / n
    return terms, facets


def dual_mixed_volume(K: SupportPolytope, Q: StarBody, q: float,
                      grid: SphereGrid) -> DualVolumeValue:
    """ Ṽ_q(K, Q) = (1/n) ∫ ρ_K^q ρ_Q^{n-q} du """
    terms, _ = node_terms(K, Q, q, grid)
    return DualVolumeValue(value=integrate(grid, terms), q=float(q), grid=grid.descriptor())


def curvature_masses(K: SupportPolytope, Q: StarBody, q: float,
                     grid: SphereGrid) -> tuple[np.ndarray, float]:
    """ Per-facet masses of C̃_q(K, Q, ·) and their total Ṽ_q(K, Q) """
    terms, facets = node_terms(K, Q, q, grid)
    masses = integrate_binned(grid, terms, facets, K.size)
    return masses, integrate(grid, terms)


def dual_curvature_measure(K: SupportPolytope, Q: StarBody, q: float,
                           grid: SphereGrid) -> DiscreteMeasure:

    """
    C̃_q(K, Q, ·) as a measure on the normals of K: atom i receives the
    quadrature mass of (1/n) ρ_K^q ρ_Q^{n-q} over the nodes whose boundary
    point lies on facet i. Facets hit by no node keep their atom with
    mass 0.
    """

    masses, total = curvature_masses(K, Q, q, grid)
    inactive = int(np.sum(masses == 0))
    if inactive:
        logger.debug("%d of %d facets receive no curvature mass", inactive, K.size)
    return DiscreteMeasure(K.normals, masses, allow_zero=True)


def dual_entropy(K: SupportPolytope, Q: StarBody, grid: SphereGrid) -> float:
    """ Ẽ(K, Q) = (1/n) ∫ log(ρ_K / ρ_Q) ρ_Q^n du """
    _check_dims(K, Q, grid)
    n = K.dim
    rho_K = K.radial(grid.nodes)
    rho_Q = np.asarray(Q.radial(grid.nodes))
    return integrate(grid, np.log(rho_K / rho_Q) * rho_Q ** n / n)


def polytope_volume(K: SupportPolytope, grid: SphereGrid) -> float:
    """ Vol(K) as the q = n dual volume against the unit ball """
    return dual_mixed_volume(K, Ball(K.dim), K.dim, grid).value


def star_volume(Q: StarBody, grid: SphereGrid) -> float:
    """ Vol(Q) = (1/n) ∫ ρ_Q^n du by quadrature, the q = 0 mass of C̃_0 """
    return integrate(grid, np.asarray(Q.radial(grid.nodes)) ** Q.dim) / Q.dim


def min_radial(K: SupportPolytope, grid: SphereGrid) -> float:
    """ Grid minimum of ρ_K; never below the true minimum """
    return float(K.radial(grid.nodes).min())

