import dataclasses
from dataclasses import dataclass, field
from enum import Enum

from ..errors import DocumentError
from ..sphere.SphereGrid import GridKind, SphereGrid, build_grid, default_kind, default_resolution

CONFIG_SCHEMA = "dualmink.config/1"


class Normalization(str, Enum):
    MAX_H_ONE = "max_h_one"


class InitMode(str, Enum):
    ONES = "ones"
    WEIGHTS = "weights"


@dataclass(frozen=True)
class StepControl:

    """
    Keyword arguments:
    initial_step: first trial step in log h, and the fallback when the
    Barzilai-Borwein step is unusable
    backtracking: factor in (0, 1) applied after each rejected trial
    sufficient_decrease: Armijo constant in (0, 0.5]
    """

    initial_step: float = 1.0
    backtracking: float = 0.5
    sufficient_decrease: float = 1e-4

    def __post_init__(self):
        if not self.initial_step > 0:
            raise ValueError(f"initial step must be positive, not {self.initial_step}")
        if not 0 < self.backtracking < 1:
            raise ValueError(f"backtracking factor must lie in (0, 1), not {self.backtracking}")
        if not 0 < self.sufficient_decrease <= 0.5:
            raise ValueError(
                f"sufficient-decrease constant must lie in (0, 0.5], not {self.sufficient_decrease}")


@dataclass(frozen=True)
class SolveConfig:

    """
    Everything a solve depends on besides μ and Q. Serializable as a
    structured document; command-line flags override document fields.
    """

    q: float
    grid_resolution: int | None = None
    grid_kind: GridKind | None = None
    max_iters: int = 2000
    tolerance: float = 1e-3
    step: StepControl = field(default_factory=StepControl)
    h_min: float = 1e-6
    normalization: Normalization = Normalization.MAX_H_ONE
    enforce_even: bool = True
    seed: int = 0
    starts: int = 1
    init: InitMode = InitMode.ONES
    override_regime: bool = False
    residual_bound: float = 2e-2
    workers: int | None = None

    def __post_init__(self):
        if self.grid_kind is not None:
            object.__setattr__(self, "grid_kind", GridKind(self.grid_kind))
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        object.__setattr__(self, "init", InitMode(self.init))
        if isinstance(self.step, dict):
            object.__setattr__(self, "step", StepControl(**self.step))

        if self.grid_resolution is not None and self.grid_resolution < 4:
            raise ValueError(f"grid resolution must be at least 4, not {self.grid_resolution}")
        if self.max_iters < 1:
            raise ValueError(f"max iterations must be positive, not {self.max_iters}")
        if not self.tolerance > 0:
            raise ValueError(f"gradient tolerance must be positive, not {self.tolerance}")
        if not self.h_min > 0:
            raise ValueError(f"support floor h_min must be positive, not {self.h_min}")
        if self.starts < 1:
            raise ValueError(f"at least one start is needed, not {self.starts}")
        if not self.residual_bound > 0:
            raise ValueError(f"residual bound must be positive, not {self.residual_bound}")

    def replace(self, **changes) -> "SolveConfig":
        changes = {key: value for key, value in changes.items() if value is not None}
        return dataclasses.replace(self, **changes)

    def build_grid(self, n: int) -> SphereGrid:
        kind = self.grid_kind or default_kind(n)
        return build_grid(n, self.grid_resolution or default_resolution(n), kind, self.seed)

    def to_document(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA,
            "q": self.q,
            "grid_resolution": self.grid_resolution,
            "grid_kind": None if self.grid_kind is None else self.grid_kind.value,
            "max_iters": self.max_iters,
            "tolerance": self.tolerance,
            "step": dataclasses.asdict(self.step),
            "h_min": self.h_min,
            "normalization": self.normalization.value,
            "enforce_even": self.enforce_even,
            "seed": self.seed,
            "starts": self.starts,
            "init": self.init.value,
            "override_regime": self.override_regime,
            "residual_bound": self.residual_bound,
            "workers": self.workers,
        }

    @classmethod
    def from_document(cls, document: dict, path: str = "config") -> "SolveConfig":
        if document.get("schema") != CONFIG_SCHEMA:
            raise DocumentError(f"{path}.schema", f"expected {CONFIG_SCHEMA!r}, got {document.get('schema')!r}")
        known = {f.name for f in dataclasses.fields(cls)}
        fields = {key: value for key, value in document.items() if key != "schema"}
        unknown = sorted(set(fields) - known)
        if unknown:
            raise DocumentError(f"{path}.{unknown[0]}", "unknown field")
        if "q" not in fields:
            raise DocumentError(f"{path}.q", "missing required field")
        step = fields.get("step")
        if step is not None:
            step_known = {f.name for f in dataclasses.fields(StepControl)}
            extra = sorted(set(step) - step_known)
            if extra:
                raise DocumentError(f"{path}.step.{extra[0]}", "unknown field")
        try:
            return cls(**fields)
        except (TypeError, ValueError) as e:
            raise DocumentError(path, str(e)) from e
