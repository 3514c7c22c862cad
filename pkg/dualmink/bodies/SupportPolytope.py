import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from ..config import tolerances
from ..errors import DimensionMismatchError, UnboundedDirectionError, UnboundedPolytopeError
from ..sphere.SphereGrid import SphereGrid, unit

logger = logging.getLogger(__name__)

# upper bound on chunk_rows * facets held in memory by the radial scan
_SCAN_BLOCK = 1 << 22


@dataclass(frozen=True)
class BodyPoint:
    direction: np.ndarray
    radius: float
    facet: int


def antipodal_partner(vectors: np.ndarray, tol: float = tolerances.MATCHING) -> np.ndarray | None:
    """
    Index of -x for every x in vectors, or None when some vector has no
    antipode within tol.
    """
    tree = cKDTree(vectors)
    dist, index = tree.query(-vectors, k=1)
    if np.any(dist > tol):
        return None
    return index


class SupportPolytope:

    """
    A convex polytope in support form K = ∩_i {ξ : ξ·x_i <= h_i}. This is
    also the Alexandrov body of any function on the sphere that takes the
    values h_i at the normals x_i.

    Keyword arguments:
    normals: (N, n) distinct unit vectors x_i
    support_numbers: (N,) positive reals h_i
    validate: check distinctness and boundedness (skipped by the solver,
    which only ever changes support numbers of a validated polytope)
    """

    def __init__(self, normals, support_numbers, validate: bool = True):
        normals = np.atleast_2d(np.array(normals, dtype=float))
        support_numbers = np.array(support_numbers, dtype=float).ravel()
        self.dim = normals.shape[1]
        if len(support_numbers) != len(normals):
            raise DimensionMismatchError(
                f"{len(normals)} normals but {len(support_numbers)} support numbers")
        if not np.all(np.isfinite(support_numbers) & (support_numbers > 0)):
            raise ValueError("support numbers must be finite and positive")

        if validate:
            norms = np.linalg.norm(normals, axis=1)
            if np.any(np.abs(norms - 1) > tolerances.MATCHING):
                raise ValueError("normals must be unit vectors")
            normals = normals / norms[:, None]
        self.normals = normals
        self._pairs = antipodal_partner(normals)
        if validate:
            self._check_distinct()
            self._check_bounded()
        self.support_numbers = support_numbers
        self.normals.setflags(write=False)
        self.support_numbers.setflags(write=False)

    @classmethod
    def _trusted(cls, normals, support_numbers, pairs) -> "SupportPolytope":
        body = cls.__new__(cls)
        body.dim = normals.shape[1]
        body.normals = normals
        body._pairs = pairs
        body.support_numbers = np.array(support_numbers, dtype=float)
        body.support_numbers.setflags(write=False)
        return body

    def _check_distinct(self):
        if len(self.normals) < self.dim + 1:
            raise UnboundedPolytopeError(
                f"a bounded polytope in R^{self.dim} needs at least {self.dim + 1} normals")
        gaps = pdist(self.normals)
        if gaps.min() <= tolerances.DISTINCT_ANGLE:
            k = int(np.argmin(gaps))
            i, j = next(itertools.islice(itertools.combinations(range(len(self.normals)), 2), k, None))
            raise ValueError(f"normals {i} and {j} are not distinct")

    def _check_bounded(self):
        from ..checks.Preconditions import HemisphereStatus, hemisphere_concentrated
        from ..measures.DiscreteMeasure import DiscreteMeasure

        uniform = DiscreteMeasure(self.normals, np.ones(len(self.normals)))
        result = hemisphere_concentrated(uniform)
        if result.status is HemisphereStatus.CONCENTRATED:
            raise UnboundedPolytopeError(
                f"normals lie in the closed hemisphere around {result.witness.tolist()}")
        if result.status is HemisphereStatus.INDETERMINATE:
            raise UnboundedPolytopeError(
                "cannot certify that the normals leave every closed hemisphere")

    # ---------------------------------------------------------------------- #
    # Properties

    @property
    def size(self) -> int:
        return len(self.normals)

    @property
    def pairs(self) -> np.ndarray | None:
        """ Index of the antipodal normal for each facet, None if not closed under negation """
        return self._pairs

    @property
    def even(self) -> bool:
        if self._pairs is None:
            return False
        h = self.support_numbers
        return bool(np.all(np.abs(h[self._pairs] - h) <= tolerances.EVEN_WEIGHTS * h.max()))

    def with_support(self, support_numbers) -> "SupportPolytope":
        """ Same normals, new support numbers, no revalidation """
        support_numbers = np.asarray(support_numbers, dtype=float)
        if support_numbers.shape != (self.size,):
            raise DimensionMismatchError(
                f"expected {self.size} support numbers, got {support_numbers.shape}")
        if not np.all(np.isfinite(support_numbers) & (support_numbers > 0)):
            raise ValueError("support numbers must be finite and positive")
        return SupportPolytope._trusted(self.normals, support_numbers, self._pairs)

    def scaled(self, factor: float) -> "SupportPolytope":
        if not factor > 0:
            raise ValueError(f"scale factor must be positive, not {factor}")
        return self.with_support(self.support_numbers * factor)

    # ---------------------------------------------------------------------- #
    # Radial map

    def _projections(self, directions: np.ndarray) -> np.ndarray:
        # accumulated one coordinate at a time in a fixed order, so that
        # (-u)·x and u·(-x) come out as exact negations of u·x
        dots = directions[:, :1] * self.normals[None, :, 0]
        for k in range(1, self.dim):
            dots = dots + directions[:, k:k + 1] * self.normals[None, :, k]
        return dots

    def radial_map(self, directions) -> tuple[np.ndarray, np.ndarray]:

        """
        ρ_K(u) = min over {i : u·x_i > 0} of h_i / (u·x_i) for each row u,
        with the index of the attaining facet. Ties go to the smallest
        index.
        """

        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        if directions.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"directions have dimension {directions.shape[1]}, polytope has {self.dim}")

        count = len(directions)
        radii = np.empty(count)
        facets = np.empty(count, dtype=np.intp)
        step = max(1, _SCAN_BLOCK // self.size)
        for start in range(0, count, step):
            block = directions[start:start + step]
            dots = self._projections(block)
            with np.errstate(divide="ignore"):
                ratios = np.where(dots > 0, self.support_numbers / np.where(dots > 0, dots, 1.0), np.inf)
            best = np.argmin(ratios, axis=1)
            rho = ratios[np.arange(len(block)), best]
            if not np.all(np.isfinite(rho)):
                raise UnboundedDirectionError(block[int(np.flatnonzero(~np.isfinite(rho))[0])])
            radii[start:start + step] = rho
            facets[start:start + step] = best
        return radii, facets

    def radial(self, directions) -> np.ndarray:
        return self.radial_map(directions)[0]

    def to_document(self) -> dict:
        return {
            "schema": "dualmink.polytope/1",
            "dim": self.dim,
            "normals": self.normals.tolist(),
            "support_numbers": self.support_numbers.tolist(),
        }

    def __repr__(self) -> str:
        return f"SupportPolytope(dim={self.dim}, facets={self.size}, even={self.even})"


# ---------------------------------------------------------------------- #
# Operations

def radial_polytope(K: SupportPolytope, u) -> BodyPoint:
    u = np.asarray(u, dtype=float)
    radii, facets = K.radial_map(u[None, :])
    return BodyPoint(direction=u, radius=float(radii[0]), facet=int(facets[0]))


def _tangent_basis(u: np.ndarray) -> np.ndarray:
    """ Orthonormal basis of the tangent space u^⊥ """
    _, _, vt = np.linalg.svd(u[None, :])
    return vt[1:]


def _golden_max(f, lo: float, hi: float, steps: int) -> tuple[float, float]:
    ratio = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - ratio * (b - a), a + ratio * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(steps):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - ratio * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + ratio * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def support_of_wulff(K: SupportPolytope, x, grid: SphereGrid,
                     steps: int = tolerances.GOLDEN_STEPS) -> float:

    """
    h_{K}(x) = max over u of ρ_K(u)(u·x), evaluated as the grid maximum
    followed by one golden-section pass along each tangent direction at
    the best node. Never below the grid maximum.
    """

    x = unit(x)
    if grid.dim != K.dim or len(x) != K.dim:
        raise DimensionMismatchError("polytope, direction and grid dimensions differ")

    values = K.radial(grid.nodes) * (grid.nodes @ x)
    best = int(np.argmax(values))
    u, value = np.array(grid.nodes[best]), float(values[best])

    # a few node spacings either side of the best node
    reach = min(math.pi / 2, 4 * math.pi / grid.resolution)

    def along(v):
        def f(theta):
            w = math.cos(theta) * u + math.sin(theta) * v
            return float(K.radial(w[None, :])[0] * (w @ x))
        return f

    for v in _tangent_basis(u):
        theta, candidate = _golden_max(along(v), -reach, reach, steps)
        if candidate > value:
            u = unit(math.cos(theta) * u + math.sin(theta) * v)
            value = candidate
    return value


def active_facets(K: SupportPolytope, grid: SphereGrid) -> np.ndarray:
    """ Boolean mask: facet i is hit by the radial map of some grid node """
    _, facets = K.radial_map(grid.nodes)
    mask = np.zeros(K.size, dtype=bool)
    mask[facets] = True
    return mask


def facet_active(K: SupportPolytope, i: int, grid: SphereGrid) -> bool:
    if not 0 <= i < K.size:
        raise IndexError(f"facet {i} out of range for {K.size} facets")
    return bool(active_facets(K, grid)[i])


# ---------------------------------------------------------------------- #
# Families

def cube(n: int, half_width: float = 1.0) -> SupportPolytope:
    """ [-a, a]^n with normals ordered e_1, -e_1, e_2, -e_2, ... """
    eye = np.eye(n)
    normals = np.vstack([v for e in eye for v in (e, -e)])
    return SupportPolytope(normals, np.full(2 * n, float(half_width)))


def truncated_cube(n: int, cut: float, half_width: float = 1.0) -> SupportPolytope:
    """ The cube with every corner cut by the plane ξ·s/√n = cut, s ∈ {±1}^n """
    corners = np.array(list(itertools.product((1.0, -1.0), repeat=n))) / math.sqrt(n)
    base = cube(n, half_width)
    normals = np.vstack([base.normals, corners])
    support = np.concatenate([base.support_numbers, np.full(len(corners), float(cut))])
    return SupportPolytope(normals, support)


def grid_polytope(grid: SphereGrid, height: float = 1.0) -> SupportPolytope:
    """ Circumscribed polytope with a facet at distance height for every grid node """
    return SupportPolytope(grid.nodes, np.full(grid.size, float(height)))


def random_polytope(n: int, count: int, seed: int, even: bool = True,
                    low: float = 0.5, high: float = 1.5) -> SupportPolytope:

    """
    Seeded random polytope: Gaussian normals, support numbers uniform in
    [low, high]. Even polytopes draw count // 2 normals and add their
    negations with the same support numbers. Unbounded draws are
    discarded and redrawn from the same generator.
    """

    if count < n + 1:
        raise ValueError(f"a bounded polytope in R^{n} needs at least {n + 1} facets")
    rng = np.random.default_rng(seed)
    for attempt in range(100):
        if even:
            half = rng.standard_normal((count // 2, n))
            half /= np.linalg.norm(half, axis=1)[:, None]
            h = rng.uniform(low, high, len(half))
            normals, support = np.vstack([half, -half]), np.concatenate([h, h])
        else:
            normals = rng.standard_normal((count, n))
            normals /= np.linalg.norm(normals, axis=1)[:, None]
            support = rng.uniform(low, high, count)
        try:
            return SupportPolytope(normals, support)
        except UnboundedPolytopeError:
            logger.debug("random polytope draw %d unbounded, redrawing", attempt)
    raise RuntimeError(f"no bounded polytope after 100 draws (n={n}, count={count})")


def nested_pair(n: int, count: int, seed: int, even: bool = True,
                growth: float = 0.5) -> tuple[SupportPolytope, SupportPolytope]:
    """ K1 ⊆ K2 on identical normals, h2_i = h1_i (1 + U[0, growth]) """
    inner = random_polytope(n, count, seed, even)
    rng = np.random.default_rng([seed, 1])
    factor = 1 + rng.uniform(0, growth, inner.size)
    if inner.pairs is not None and even:
        factor = np.minimum(factor, factor[inner.pairs])
    return inner, inner.with_support(inner.support_numbers * factor)


def ellipsoid_polytope(semi_axes, normals, rotation=None) -> SupportPolytope:
    """ Polytope circumscribed about the ellipsoid: h(x) = |diag(b) P x| at each normal """
    semi_axes = np.asarray(semi_axes, dtype=float)
    rotation = np.eye(len(semi_axes)) if rotation is None else np.asarray(rotation, dtype=float)
    normals = np.asarray(normals, dtype=float)
    support = np.linalg.norm((normals @ rotation.T) * semi_axes[None, :], axis=1)
    return SupportPolytope(normals, support)
