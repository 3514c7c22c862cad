import logging
import math

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from ..config import tolerances
from ..errors import AmbiguousMatchingError, DimensionMismatchError

logger = logging.getLogger(__name__)


class DiscreteMeasure:

    """
    A finite measure μ = Σ α_i δ_{x_i} on S^{n-1}.

    Keyword arguments:
    atoms: (N, n) distinct unit vectors
    weights: (N,) positive masses
    allow_zero: keep zero-mass atoms (curvature measures of polytopes with
    inactive facets keep the facet index space of the polytope)
    """

    def __init__(self, atoms, weights, allow_zero: bool = False):
        atoms = np.atleast_2d(np.array(atoms, dtype=float))
        weights = np.array(weights, dtype=float).ravel()
        if len(atoms) == 0:
            raise ValueError("a measure needs at least one atom")
        if len(weights) != len(atoms):
            raise DimensionMismatchError(f"{len(atoms)} atoms but {len(weights)} weights")
        if atoms.shape[1] < 2:
            raise ValueError(f"atoms must live in R^n with n >= 2, got n = {atoms.shape[1]}")

        norms = np.linalg.norm(atoms, axis=1)
        if np.any(np.abs(norms - 1) > tolerances.MATCHING):
            k = int(np.argmax(np.abs(norms - 1)))
            raise ValueError(f"atom {k} is not a unit vector (norm {norms[k]!r})")
        atoms = atoms / norms[:, None]

        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        if allow_zero:
            if np.any(weights < 0):
                raise ValueError("weights must be non-negative")
        elif not np.all(weights > 0):
            raise ValueError(f"weights must be positive, got minimum {weights.min()!r}")

        if len(atoms) > 1:
            gaps = pdist(atoms)
            if gaps.min() <= tolerances.DISTINCT_ANGLE:
                raise ValueError("atoms must be pairwise distinct")

        self.dim = atoms.shape[1]
        self.atoms = atoms
        self.weights = weights
        self.atoms.setflags(write=False)
        self.weights.setflags(write=False)
        self.total = math.fsum(weights)
        if not allow_zero and not self.total > 0:
            raise ValueError("total mass must be positive")

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def even(self) -> bool:
        from ..checks.Preconditions import check_even
        return check_even(self)

    @property
    def zero_atoms(self) -> np.ndarray:
        """ Indices of atoms carrying no mass """
        return np.flatnonzero(self.weights == 0)

    def support_part(self) -> "DiscreteMeasure":
        """ The same measure without its zero-mass atoms """
        keep = self.weights > 0
        return DiscreteMeasure(self.atoms[keep], self.weights[keep])

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.atoms, self.weights * factor, allow_zero=True)

    def normalized(self) -> "DiscreteMeasure":
        """ The probability measure μ / |μ| """
        return self.scaled(1 / self.total)

    def to_document(self) -> dict:
        return {
            "schema": "dualmink.measure/1",
            "dim": self.dim,
            "atoms": self.atoms.tolist(),
            "weights": self.weights.tolist(),
            "even": self.even,
        }

    def __repr__(self) -> str:
        return f"DiscreteMeasure(dim={self.dim}, atoms={len(self)}, total={self.total:.6g})"


def uniform_measure(atoms, total: float = 1.0) -> DiscreteMeasure:
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    return DiscreteMeasure(atoms, np.full(len(atoms), total / len(atoms)))


def _match(source: np.ndarray, target: np.ndarray, tol: float) -> np.ndarray:
    """ For each source atom the target atom within tol, or -1 """
    tree = cKDTree(target)
    matches = np.full(len(source), -1, dtype=np.intp)
    for i, hits in enumerate(tree.query_ball_point(source, r=tol)):
        if len(hits) > 1:
            raise AmbiguousMatchingError(
                f"atom {i} is within {tol:g} of atoms {sorted(hits)} of the other measure")
        if hits:
            matches[i] = hits[0]
    return matches


def matching(mu: DiscreteMeasure, nu: DiscreteMeasure,
             tol: float = tolerances.MATCHING) -> tuple[np.ndarray, np.ndarray]:
    """
    Pair atoms by angular proximity within tol: (index into nu for each atom
    of mu, index into mu for each atom of nu), -1 where unmatched.
    """
    if mu.dim != nu.dim:
        raise DimensionMismatchError(f"measures live in R^{mu.dim} and R^{nu.dim}")
    forward = _match(mu.atoms, nu.atoms, tol)
    backward = _match(nu.atoms, mu.atoms, tol)
    for i, j in enumerate(forward):
        if j >= 0 and backward[j] != i:
            raise AmbiguousMatchingError(f"atom {j} of the second measure matches several atoms")
    return forward, backward


def atom_errors(mu: DiscreteMeasure, nu: DiscreteMeasure,
                tol: float = tolerances.MATCHING) -> np.ndarray:
    """ α_i - β_{match(i)} for each atom of mu (all of α_i when unmatched) """
    forward, _ = matching(mu, nu, tol)
    matched = np.where(forward >= 0, nu.weights[np.maximum(forward, 0)], 0.0)
    return mu.weights - matched


def total_variation_distance(mu: DiscreteMeasure, nu: DiscreteMeasure,
                             tol: float = tolerances.MATCHING) -> float:
    """
    Σ_matched |α_i - β_j| + Σ_unmatched masses, with atoms matched by
    angular proximity within tol.
    """
    forward, backward = matching(mu, nu, tol)
    matched = np.where(forward >= 0, nu.weights[np.maximum(forward, 0)], 0.0)
    terms = np.concatenate([np.abs(mu.weights - matched), nu.weights[backward < 0]])
    return math.fsum(terms)
