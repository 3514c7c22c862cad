import dataclasses
import functools
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import linalg, special

from ..config import tolerances
from ..errors import GridInvariantError, NonFiniteIntegrandError

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray] | np.ndarray

MAX_DIM = 8
MAX_GRID_NODES = 2_000_000


class GridKind(str, Enum):
    PRODUCT = "product"
    MONTE_CARLO = "monte_carlo"


def sphere_area(n: int) -> float:
    """ Surface area ω_{n-1} of the unit sphere in R^n """
    return 2 * math.pi ** (n / 2) / special.gamma(n / 2)


def ball_volume(n: int) -> float:
    """ Volume κ_n of the unit ball in R^n """
    return sphere_area(n) / n


def unit(x) -> np.ndarray:
    """ Normalize a vector, refusing the zero vector """
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError(f"cannot normalize {x!r}")
    return x / norm


@dataclass(frozen=True, eq=False)
class SphereGrid:

    """
    Quadrature nodes and weights on S^{n-1}. Immutable once built.

    Keyword arguments:
    dim: int -- ambient dimension n
    nodes: np.ndarray -- (N, n) unit vectors
    weights: np.ndarray -- (N,) positive surface-measure weights
    antipodes: np.ndarray -- index of -u for every node, or None
    kind: GridKind -- product or monte_carlo
    resolution: int -- the resolution the grid was built with
    seed: int -- Monte Carlo seed (None for product grids)
    tolerance: float -- documented relative tolerance of the weight sum
    """

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    antipodes: np.ndarray | None
    kind: GridKind
    resolution: int
    seed: int | None = None
    tolerance: float = tolerances.GRID_RELATIVE

    def __post_init__(self):
        for name in ("nodes", "weights", "antipodes"):
            value = getattr(self, name)
            if value is not None:
                value = np.array(value)
                value.setflags(write=False)
                object.__setattr__(self, name, value)

    @property
    def symmetric(self) -> bool:
        return self.antipodes is not None

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def area(self) -> float:
        return sphere_area(self.dim)

    def descriptor(self) -> dict:
        """ The serializable form; nodes are regenerated, never stored """
        return {
            "dim": self.dim,
            "kind": self.kind.value,
            "resolution": self.resolution,
            "seed": self.seed,
        }

    def refined(self, factor: int = 2) -> "SphereGrid":
        return build_grid(self.dim, self.resolution * factor, self.kind, self.seed)

    def rotated(self, rotation) -> "SphereGrid":
        """ The same rule with every node mapped by an orthogonal matrix """
        rotation = np.asarray(rotation, dtype=float)
        if rotation.shape != (self.dim, self.dim):
            raise ValueError(f"rotation must be {self.dim}x{self.dim}, got {rotation.shape}")
        return dataclasses.replace(self, nodes=self.nodes @ rotation.T)

    def validate(self) -> None:
        """
        Check every grid invariant, raising GridInvariantError naming the
        first one that fails.
        """
        nodes, weights = self.nodes, self.weights
        if nodes.ndim != 2 or nodes.shape[1] != self.dim or len(weights) != len(nodes):
            raise GridInvariantError(
                "shape invariant", f"nodes {nodes.shape}, weights {weights.shape}")

        norms = np.linalg.norm(nodes, axis=1)
        worst = int(np.argmax(np.abs(norms - 1)))
        if abs(norms[worst] - 1) > tolerances.NODE_NORM:
            raise GridInvariantError(
                "node-norm invariant", f"node {worst} has norm {norms[worst]!r}")

        if not np.all(weights > 0):
            raise GridInvariantError(
                "weight-positivity invariant",
                f"node {int(np.argmin(weights))} has weight {weights.min()!r}")

        total = math.fsum(weights)
        gap = abs(total - self.area) / self.area
        if gap > self.tolerance:
            raise GridInvariantError(
                "weight-sum invariant",
                f"sum {total!r} vs area {self.area!r} (relative gap {gap:.3g})")

        if self.symmetric:
            anti = self.antipodes
            if (not np.array_equal(anti[anti], np.arange(self.size))
                    or not np.array_equal(nodes[anti], -nodes)
                    or not np.array_equal(weights[anti], weights)):
                raise GridInvariantError(
                    "antipodal-symmetry invariant", "nodes or weights not paired exactly")


# ---------------------------------------------------------------------- #
# Construction

def _polar_rule(levels: int, d: int):
    """
    Gauss rule for (1 - t^2)^{(d-2)/2} on [-1, 1], the polar factor when
    lifting S^{d-1} to S^d. Symmetrized so that t -> -t pairs are exact.
    """
    t, w = special.roots_gegenbauer(levels, (d - 1) / 2)
    order = np.argsort(t)
    t, w = t[order], w[order]
    return (t - t[::-1]) / 2, (w + w[::-1]) / 2


def _product_grid(n: int, resolution: int):
    azimuths = resolution + resolution % 2
    half = azimuths // 2
    theta = 2 * np.pi * (np.arange(half) + 0.5) / azimuths
    arc = np.column_stack([np.cos(theta), np.sin(theta)])
    nodes = np.vstack([arc, -arc])
    weights = np.full(azimuths, 2 * np.pi / azimuths)
    antipodes = (np.arange(azimuths) + half) % azimuths

    levels = max(2, resolution // 2)
    for d in range(2, n):
        t, w = _polar_rule(levels, d)
        s = np.sqrt(1 - t * t)
        inner = len(nodes)
        lifted = np.empty((levels, inner, d + 1))
        lifted[:, :, 0] = t[:, None]
        lifted[:, :, 1:] = s[:, None, None] * nodes[None, :, :]
        nodes = lifted.reshape(levels * inner, d + 1)
        weights = (w[:, None] * weights[None, :]).ravel()
        flipped = (levels - 1 - np.arange(levels))[:, None] * inner
        antipodes = (flipped + antipodes[None, :]).ravel()

    return nodes, weights, antipodes


def _monte_carlo_grid(n: int, resolution: int, seed: int):
    half = (resolution ** (n - 1) + 1) // 2
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((half, n))
    draws /= np.linalg.norm(draws, axis=1)[:, None]
    nodes = np.vstack([draws, -draws])
    weights = np.full(2 * half, sphere_area(n) / (2 * half))
    antipodes = (np.arange(2 * half) + half) % (2 * half)
    return nodes, weights, antipodes


def _expected_size(n: int, resolution: int, kind: GridKind) -> int:
    if kind is GridKind.MONTE_CARLO:
        return resolution ** (n - 1)
    return (resolution + resolution % 2) * max(2, resolution // 2) ** (n - 2)


@functools.lru_cache(maxsize=32)
def _cached_grid(n: int, resolution: int, kind: GridKind, seed: int | None,
                 tolerance: float) -> SphereGrid:
    if kind is GridKind.PRODUCT:
        nodes, weights, antipodes = _product_grid(n, resolution)
    else:
        nodes, weights, antipodes = _monte_carlo_grid(n, resolution, seed)

    norms = np.linalg.norm(nodes, axis=1)
    nodes = nodes / norms[:, None]
    grid = SphereGrid(
        dim=n, nodes=nodes, weights=weights, antipodes=antipodes,
        kind=kind, resolution=resolution,
        seed=seed if kind is GridKind.MONTE_CARLO else None,
        tolerance=tolerance)
    grid.validate()
    logger.debug("built %s grid n=%d resolution=%d: %d nodes",
                 kind.value, n, resolution, grid.size)
    return grid


def build_grid(n: int, resolution: int, kind: GridKind | str = GridKind.PRODUCT,
               seed: int | None = None,
               tolerance: float = tolerances.GRID_RELATIVE) -> SphereGrid:

    """
    Build a deterministic, antipodally symmetric grid on S^{n-1}.

    Product grids tensor an even azimuthal circle rule with Gauss-Gegenbauer
    rules in the polar angles (resolution azimuths, resolution // 2 polar
    nodes per level). Monte Carlo grids draw resolution^(n-1) nodes as
    antithetic pairs ±u with equal weights ω_{n-1}/N.
    """

    kind = GridKind(kind)
    if n < 2:
        raise ValueError(f"sphere dimension must be at least 2, not {n}")
    if n > MAX_DIM:
        raise ValueError(f"dimensions above {MAX_DIM} are not supported, got {n}")
    if resolution < 4:
        raise ValueError(f"resolution must be at least 4, not {resolution}")
    if kind is GridKind.MONTE_CARLO and seed is None:
        raise ValueError("monte_carlo grids require a seed")
    if _expected_size(n, resolution, kind) > MAX_GRID_NODES:
        raise ValueError(
            f"grid n={n} resolution={resolution} would exceed {MAX_GRID_NODES} nodes")
    return _cached_grid(n, int(resolution), kind, seed, float(tolerance))


def default_kind(n: int) -> GridKind:
    """ Product grids up to R^4, Monte Carlo beyond """
    return GridKind.PRODUCT if n <= 4 else GridKind.MONTE_CARLO


def default_resolution(n: int) -> int:
    """
    Resolution used when none is given. Small facets need a few hundred
    nodes each before hard binning stops dominating the solver's gradient,
    so the plane and R^3 get fine grids; beyond R^4 Monte Carlo grids are
    held near 2^16 nodes.
    """
    if n <= 2:
        return 1024
    if n == 3:
        return 320
    if n == 4:
        return 96
    return max(4, round(2 ** (16 / (n - 1))))


# ---------------------------------------------------------------------- #
# Quadrature

def _evaluate(grid: SphereGrid, f: ScalarField) -> np.ndarray:
    values = f(grid.nodes) if callable(f) else f
    values = np.asarray(values, dtype=float)
    if values.ndim == 0:
        values = np.full(grid.size, float(values))
    if values.shape != (grid.size,):
        raise ValueError(f"integrand has shape {values.shape}, expected ({grid.size},)")
    bad = np.flatnonzero(~np.isfinite(values))
    if len(bad):
        raise NonFiniteIntegrandError(int(bad[0]), grid.nodes[bad[0]])
    return values


def integrate(grid: SphereGrid, f: ScalarField) -> float:

    """
    Σ_k weights_k f(nodes_k). The reduction is math.fsum, which returns the
    correctly rounded sum independently of evaluation order, so results are
    bit-reproducible and exactly odd-cancelling on symmetric grids.

    f: either a callable taking the (N, n) node array or the (N,) values.
    """

    return math.fsum(grid.weights * _evaluate(grid, f))


def integrate_binned(grid: SphereGrid, f: ScalarField, bins: np.ndarray,
                     count: int) -> np.ndarray:
    """ Per-bin fsum of weights * f; bins are integer labels in [0, count) """
    terms = grid.weights * _evaluate(grid, f)
    order = np.argsort(bins, kind="stable")
    edges = np.searchsorted(bins[order], np.arange(count + 1))
    ordered = terms[order]
    return np.array([math.fsum(ordered[edges[i]:edges[i + 1]]) for i in range(count)])


def rank_of_atoms(vectors, tol: float = tolerances.RANK_THRESHOLD) -> int:
    """ Numerical rank by column-pivoted QR, counting pivots above tol """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    if len(vectors) == 0:
        raise ValueError("rank of an empty vector list is undefined")
    _, r, _ = linalg.qr(vectors.T, mode="economic", pivoting=True)
    return int(np.sum(np.abs(np.diag(r)) > tol))
