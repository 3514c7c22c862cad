import csv
import hashlib
import json
import logging
import math
import os
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..bodies.StarBody import Ball, Ellipsoid, RadialGrid, StarBody
from ..bodies.SupportPolytope import SupportPolytope
from ..errors import DocumentError, DualMinkError
from ..measures.DiscreteMeasure import DiscreteMeasure
from ..solver.SolveConfig import SolveConfig
from ..sphere.SphereGrid import build_grid

logger = logging.getLogger(__name__)

PathLike = str | os.PathLike

MEASURE_SCHEMA = "dualmink.measure/1"
STAR_SCHEMA = "dualmink.star/1"
POLYTOPE_SCHEMA = "dualmink.polytope/1"
MANIFEST_SCHEMA = "dualmink.manifest/1"


# ---------------------------------------------------------------------- #
# Canonical form

def _plain(value: Any) -> Any:
    """ JSON-ready copy: numpy types unwrapped, non-finite floats as null """
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def canonical_text(document: dict) -> str:
    """
    Sorted keys, two-space indentation, floats in their shortest
    round-tripping decimal form (at most 17 significant digits).
    """
    return json.dumps(_plain(document), sort_keys=True, indent=2, ensure_ascii=False,
                      allow_nan=False) + "\n"


def digest(document: dict) -> str:
    """ sha256 of the canonical text """
    return hashlib.sha256(canonical_text(document).encode("utf-8")).hexdigest()


def write_document(path: PathLike, document: dict) -> str:
    """ Write the canonical text of a document and return its digest """
    text = canonical_text(document)
    Path(path).write_text(text, encoding="utf-8")
    logger.debug("wrote %s", path)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def read_document(path: PathLike) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DocumentError(str(path), e.strerror or str(e)) from e
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"{path}:{e.lineno}:{e.colno}", e.msg) from e
    if not isinstance(document, dict):
        raise DocumentError(str(path), "top level must be an object")
    return document


def write_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


# ---------------------------------------------------------------------- #
# Parsing

def _require(document: dict, key: str, path: str) -> Any:
    if key not in document:
        raise DocumentError(f"{path}.{key}", "missing required field")
    return document[key]


def _check_header(document: dict, schema: str, path: str) -> int:
    if document.get("schema") != schema:
        raise DocumentError(f"{path}.schema", f"expected {schema!r}, got {document.get('schema')!r}")
    dim = _require(document, "dim", path)
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 2:
        raise DocumentError(f"{path}.dim", f"expected an integer >= 2, got {dim!r}")
    return dim


def _check_fields(document: dict, allowed: set, path: str) -> None:
    unknown = sorted(set(document) - allowed)
    if unknown:
        raise DocumentError(f"{path}.{unknown[0]}", "unknown field")


def _array(document: dict, key: str, path: str, shape: tuple) -> np.ndarray:
    """ A numeric array whose shape matches, with None for a free axis """
    raw = _require(document, key, path)
    try:
        array = np.array(raw, dtype=float)
    except (TypeError, ValueError) as e:
        raise DocumentError(f"{path}.{key}", "expected numbers") from e
    if array.ndim != len(shape) or any(s is not None and s != a for s, a in zip(shape, array.shape)):
        raise DocumentError(f"{path}.{key}", f"expected shape {shape}, got {array.shape}")
    bad = np.argwhere(~np.isfinite(array))
    if len(bad):
        index = "".join(f"[{i}]" for i in bad[0])
        raise DocumentError(f"{path}.{key}{index}", "non-finite number")
    return array


def parse_measure(document: dict, path: str = "measure") -> DiscreteMeasure:
    dim = _check_header(document, MEASURE_SCHEMA, path)
    _check_fields(document, {"schema", "dim", "atoms", "weights", "even"}, path)
    atoms = _array(document, "atoms", path, (None, dim))
    weights = _array(document, "weights", path, (len(atoms),))
    try:
        return DiscreteMeasure(atoms, weights)
    except ValueError as e:
        raise DocumentError(path, str(e)) from e


def parse_polytope(document: dict, path: str = "polytope") -> SupportPolytope:
    dim = _check_header(document, POLYTOPE_SCHEMA, path)
    _check_fields(document, {"schema", "dim", "normals", "support_numbers"}, path)
    normals = _array(document, "normals", path, (None, dim))
    support = _array(document, "support_numbers", path, (len(normals),))
    try:
        return SupportPolytope(normals, support)
    except (ValueError, DualMinkError) as e:
        raise DocumentError(path, str(e)) from e


def parse_star(document: dict, path: str = "star") -> StarBody:
    dim = _check_header(document, STAR_SCHEMA, path)
    _check_fields(document, {"schema", "dim", "variant", "parameters"}, path)
    variant = _require(document, "variant", path)
    parameters = _require(document, "parameters", path)
    where = f"{path}.parameters"
    if not isinstance(parameters, dict):
        raise DocumentError(where, "expected an object")

    try:
        if variant == "ball":
            _check_fields(parameters, {"radius"}, where)
            return Ball(dim, float(parameters.get("radius", 1.0)))
        if variant == "ellipsoid":
            _check_fields(parameters, {"semi_axes", "rotation"}, where)
            semi_axes = _array(parameters, "semi_axes", where, (dim,))
            rotation = None
            if parameters.get("rotation") is not None:
                rotation = _array(parameters, "rotation", where, (dim, dim))
            return Ellipsoid(semi_axes, rotation)
        if variant == "radial_grid":
            _check_fields(parameters, {"grid", "values"}, where)
            descriptor = _require(parameters, "grid", where)
            if not isinstance(descriptor, dict):
                raise DocumentError(f"{where}.grid", "expected an object")
            if descriptor.get("dim") != dim:
                raise DocumentError(f"{where}.grid.dim", f"expected {dim}, got {descriptor.get('dim')!r}")
            grid = build_grid(dim, _require(descriptor, "resolution", f"{where}.grid"),
                              _require(descriptor, "kind", f"{where}.grid"), descriptor.get("seed"))
            return RadialGrid(grid, _array(parameters, "values", where, (grid.size,)))
    except (TypeError, ValueError) as e:
        raise DocumentError(where, str(e)) from e
    raise DocumentError(f"{path}.variant", f"unknown variant {variant!r}")


def load_measure(path: PathLike) -> DiscreteMeasure:
    return parse_measure(read_document(path), str(path))


def load_polytope(path: PathLike) -> SupportPolytope:
    return parse_polytope(read_document(path), str(path))


def load_star(path: PathLike) -> StarBody:
    return parse_star(read_document(path), str(path))


def load_config(path: PathLike) -> SolveConfig:
    return SolveConfig.from_document(read_document(path), str(path))


# ---------------------------------------------------------------------- #
# Manifest

@dataclass
class RunManifest:

    """
    Provenance written next to the outputs of a command. Wall time varies
    between runs, so the manifest is not one of the deterministic outputs.
    """

    command: str
    inputs: list[str]
    config_digest: str
    version: str
    wall_time: float
    outputs: list[str] = field(default_factory=list)

    def to_document(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "command": self.command,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "config_digest": self.config_digest,
            "version": self.version,
            "wall_time": self.wall_time,
        }
