import logging

import numpy as np

from ..config import tolerances
from ..errors import OffGridEvaluationError
from ..sphere.SphereGrid import SphereGrid

logger = logging.getLogger(__name__)

Radial = float | np.ndarray


class StarBody:

    """
    A star body Q given through its radial function ρ_Q. Subclasses are
    immutable; `radial` accepts one direction (n,) or a stack (N, n) of
    unit vectors and answers a float or an (N,) array accordingly.
    """

    variant = "abstract"

    def __init__(self, dim: int):
        if dim < 2:
            raise ValueError(f"star bodies live in R^n with n >= 2, not {dim}")
        self.dim = dim

    @property
    def even(self) -> bool:
        return True

    def _radial(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def radial(self, u) -> Radial:
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.dim:
            raise ValueError(f"direction has dimension {u.shape[-1]}, body has {self.dim}")
        values = self._radial(np.atleast_2d(u))
        return float(values[0]) if u.ndim == 1 else values

    def radial_bounds(self) -> tuple[float, float]:
        """ (min ρ_Q, max ρ_Q) over the sphere """
        raise NotImplementedError

    def parameters(self) -> dict:
        raise NotImplementedError

    def to_document(self) -> dict:
        return {
            "schema": "dualmink.star/1",
            "dim": self.dim,
            "variant": self.variant,
            "parameters": self.parameters(),
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim}, {self.parameters()})"


class Ball(StarBody):

    variant = "ball"

    def __init__(self, dim: int, radius: float = 1.0):
        super().__init__(dim)
        if not radius > 0:
            raise ValueError(f"ball radius must be positive, not {radius}")
        self.radius = float(radius)

    def _radial(self, u):
        return np.full(len(u), self.radius)

    def radial_bounds(self):
        return self.radius, self.radius

    def parameters(self):
        return {"radius": self.radius}


class Ellipsoid(StarBody):

    """
    Origin-centred ellipsoid {y : |A P y| <= 1} with A = diag(1/b_1, ..., 1/b_n),
    so that ρ(u) = 1 / |A P u|.

    Keyword arguments:
    semi_axes: non-decreasing positive lengths b_1 <= ... <= b_n
    rotation: orthogonal matrix P (identity when omitted)
    """

    variant = "ellipsoid"

    def __init__(self, semi_axes, rotation=None):
        semi_axes = np.asarray(semi_axes, dtype=float)
        super().__init__(len(semi_axes))
        if not np.all(semi_axes > 0):
            raise ValueError(f"semi-axes must be positive, got {semi_axes}")
        if np.any(np.diff(semi_axes) < 0):
            raise ValueError(f"semi-axes must be sorted b_1 <= ... <= b_n, got {semi_axes}")
        rotation = np.eye(self.dim) if rotation is None else np.asarray(rotation, dtype=float)
        if rotation.shape != (self.dim, self.dim):
            raise ValueError(f"rotation must be {self.dim}x{self.dim}")
        if np.max(np.abs(rotation.T @ rotation - np.eye(self.dim))) > tolerances.ROTATION_ORTHOGONALITY:
            raise ValueError("rotation is not orthogonal")
        self.semi_axes = semi_axes
        self.rotation = rotation
        self._transform = rotation / semi_axes[:, None]

    def _radial(self, u):
        return 1.0 / np.linalg.norm(u @ self._transform.T, axis=1)

    def radial_bounds(self):
        return float(self.semi_axes[0]), float(self.semi_axes[-1])

    def parameters(self):
        return {
            "semi_axes": self.semi_axes.tolist(),
            "rotation": self.rotation.tolist(),
        }


class RadialGrid(StarBody):

    """
    A star body sampled on the nodes of a quadrature grid. Evaluation is
    only defined at those nodes: interpolation is refused so that error
    accounting stays with the grid.
    """

    variant = "radial_grid"

    def __init__(self, grid: SphereGrid, values):
        super().__init__(grid.dim)
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.size,):
            raise ValueError(f"expected {grid.size} radial values, got {values.shape}")
        if not np.all(np.isfinite(values) & (values > 0)):
            raise ValueError("radial values must be finite and positive at every node")
        self.grid = grid
        self.values = values
        self._index = {node.tobytes(): k for k, node in enumerate(grid.nodes)}

    @property
    def even(self) -> bool:
        if not self.grid.symmetric:
            return False
        paired = self.values[self.grid.antipodes]
        return bool(np.all(np.abs(paired - self.values) <= tolerances.STAR_EVENNESS))

    def _radial(self, u):
        if u is self.grid.nodes or (u.shape == self.grid.nodes.shape
                                    and np.array_equal(u, self.grid.nodes)):
            return self.values
        index = []
        for row in u:
            k = self._index.get(np.ascontiguousarray(row).tobytes())
            if k is None:
                raise OffGridEvaluationError(
                    f"direction {row.tolist()} is not a node of the sampling grid")
            index.append(k)
        return self.values[index]

    def radial_bounds(self):
        return float(self.values.min()), float(self.values.max())

    def parameters(self):
        return {"grid": self.grid.descriptor(), "values": self.values.tolist()}


# ---------------------------------------------------------------------- #
# Operations

def radial_star(Q: StarBody, u) -> Radial:
    """ ρ_Q(u) """
    return Q.radial(u)


def minkowski_functional(Q: StarBody, y) -> float:
    """ ‖y‖_Q = inf{λ > 0 : y ∈ λQ} = |y| / ρ_Q(y/|y|), and 0 at the origin """
    y = np.asarray(y, dtype=float)
    norm = float(np.linalg.norm(y))
    if norm == 0:
        return 0.0
    return norm / Q.radial(y / norm)

