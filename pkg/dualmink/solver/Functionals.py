import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..bodies.StarBody import StarBody
from ..bodies.SupportPolytope import SupportPolytope
from ..errors import DimensionMismatchError, OffGridEvaluationError
from ..measures.DiscreteMeasure import DiscreteMeasure
from ..measures.DualMeasures import node_terms, star_volume
from ..sphere.SphereGrid import SphereGrid, integrate, integrate_binned

logger = logging.getLogger(__name__)

# seeds the fixed rotation of the grid copy that measures binning noise
NOISE_ROTATION_SEED = 20_011


@dataclass(frozen=True)
class Evaluation:

    """
    One pass over the grid at support numbers h.

    objective: J[h] (q != 0) or J̃[h] (q = 0)
    gradient: ∂/∂h_i of the objective
    masses: C̃_q(K_h, Q, {x_i}) per atom
    denominator: Ṽ_q(K_h, Q) for q != 0, Vol(Q) for q = 0
    node_share: largest single-node share of the denominator
    """

    objective: float
    gradient: np.ndarray
    masses: np.ndarray
    denominator: float
    node_share: float = 0.0

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.gradient))


def noise_rotation(n: int) -> np.ndarray:
    """ A fixed orthogonal matrix with determinant 1 """
    rng = np.random.default_rng(NOISE_ROTATION_SEED)
    basis, triangular = linalg.qr(rng.standard_normal((n, n)))
    basis = basis * np.sign(np.diag(triangular))
    if np.linalg.det(basis) < 0:
        basis[:, 0] = -basis[:, 0]
    return basis


class Problem:

    """
    The discrete minimization problem: candidate bodies are the Wulff
    shapes K_h over the atoms of μ, parametrized by their support numbers.
    The objective is

      J[h]  = (1/|μ|) Σ α_i log h_i - (1/q) log Ṽ_q(K_h, Q)        q != 0
      J̃[h] = (1/|μ|) Σ α_i log h_i - Ẽ(K_h, Q) / Vol(Q)            q = 0

    both homogeneous of degree zero in h.

    Raises OffGridEvaluationError when Q is only known on a grid other
    than the one given.
    """

    def __init__(self, mu: DiscreteMeasure, Q: StarBody, q: float, grid: SphereGrid):
        if not mu.dim == Q.dim == grid.dim:
            raise DimensionMismatchError(
                f"measure in R^{mu.dim}, star body in R^{Q.dim}, grid on S^{grid.dim - 1}")
        self.mu = mu
        self.Q = Q
        self.q = float(q)
        self.grid = grid
        self.template = SupportPolytope(mu.atoms, np.ones(len(mu)))
        self.alpha = mu.weights / mu.total
        self._rho_Q = np.asarray(Q.radial(grid.nodes))
        self.vol_Q = star_volume(Q, grid) if self.q == 0 else None

    @property
    def pairs(self) -> np.ndarray | None:
        return self.template.pairs

    @functools.cached_property
    def _rotated(self) -> "Problem | None":
        try:
            return Problem(self.mu, self.Q, self.q, self.grid.rotated(noise_rotation(self.grid.dim)))
        except OffGridEvaluationError:
            logger.debug("star body exists only on its grid; no rotated copy for noise estimates")
            return None

    def body(self, h) -> SupportPolytope:
        return self.template.with_support(h)

    def _log_term(self, h: np.ndarray) -> float:
        return math.fsum(self.alpha * np.log(h))

    def evaluate(self, h) -> Evaluation:
        h = np.asarray(h, dtype=float)
        K = self.body(h)
        n = K.dim

        if self.q == 0:
            rho_K, facets = K.radial_map(self.grid.nodes)
            volume_terms = self._rho_Q ** n / n
            entropy = integrate(self.grid, np.log(rho_K / self._rho_Q) * volume_terms)
            masses = integrate_binned(self.grid, volume_terms, facets, K.size)
            denominator = self.vol_Q
            objective = self._log_term(h) - entropy / denominator
            share = float(np.max(self.grid.weights * volume_terms)) / denominator
        else:
            terms, facets = node_terms(K, self.Q, self.q, self.grid)
            masses = integrate_binned(self.grid, terms, facets, K.size)
            denominator = integrate(self.grid, terms)
            objective = self._log_term(h) - math.log(denominator) / self.q
            share = float(np.max(self.grid.weights * terms)) / denominator

        gradient = (self.alpha - masses / denominator) / h
        return Evaluation(objective, gradient, masses, denominator, share)

    def objective(self, h) -> float:
        return self.evaluate(h).objective

    def gradient(self, h) -> np.ndarray:
        return self.evaluate(h).gradient

    def gradient_noise(self, h, ev: Evaluation | None = None) -> float | None:

        """
        Distance between the gradient at h and the gradient at h on a
        rotated copy of the grid. Each node is binned to a single facet, so
        the gradient is only known to about this level; descent cannot
        resolve gradient norms below it. None when Q is tied to its grid.
        """

        if self._rotated is None:
            return None
        ev = ev or self.evaluate(h)
        return float(np.linalg.norm(ev.gradient - self._rotated.gradient(h)))


# ---------------------------------------------------------------------- #
# Operations

def objective_J(h, mu: DiscreteMeasure, Q: StarBody, q: float, grid: SphereGrid) -> float:
    if q == 0:
        raise ValueError("J is defined for q != 0; use objective_Jtilde at q = 0")
    return Problem(mu, Q, q, grid).objective(h)


def objective_Jtilde(h, mu: DiscreteMeasure, Q: StarBody, grid: SphereGrid) -> float:
    return Problem(mu, Q, 0.0, grid).objective(h)


def gradient(h, mu: DiscreteMeasure, Q: StarBody, q: float, grid: SphereGrid) -> np.ndarray:

    """
    ∂J/∂h_i = α_i / (|μ| h_i) - C̃_q(K_h, Q, {x_i}) / (Ṽ_q(K_h, Q) h_i), with
    Vol(Q) in place of Ṽ_q at q = 0. Facets receiving no curvature mass keep
    only the first term.
    """

    return Problem(mu, Q, q, grid).gradient(h)
