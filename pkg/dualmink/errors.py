import numpy as np


class DualMinkError(Exception):
    """ Base class for every error raised by dualmink """


class DimensionMismatchError(DualMinkError, ValueError):
    pass


class NonFiniteIntegrandError(DualMinkError):

    def __init__(self, index: int, node):
        self.index = index
        self.node = np.asarray(node, dtype=float)
        coords = ", ".join(f"{c:.6g}" for c in self.node)
        super().__init__(f"non-finite integrand at node {index} ({coords})")


class OffGridEvaluationError(DualMinkError):
    pass


class UnboundedDirectionError(DualMinkError):

    def __init__(self, direction):
        self.direction = np.asarray(direction, dtype=float)
        coords = ", ".join(f"{c:.6g}" for c in self.direction)
        super().__init__(f"no facet faces direction ({coords}): body is unbounded")


class UnboundedPolytopeError(DualMinkError):
    pass


class AmbiguousMatchingError(DualMinkError):
    pass


class EnumerationBudgetError(DualMinkError):
    """ The exact subspace check would exceed its enumeration budget """

    def __init__(self, message: str):
        super().__init__(f"exact check infeasible: {message}")


class DocumentError(DualMinkError):
    """ A structured document failed to parse or validate """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class GridInvariantError(DualMinkError):
    """ A quadrature grid violates one of its documented invariants """

    def __init__(self, invariant: str, detail: str):
        self.invariant = invariant
        super().__init__(f"{invariant} violated: {detail}")
