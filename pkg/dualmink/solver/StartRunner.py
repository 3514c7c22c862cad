import logging
import traceback
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class StartState:
    index: int
    seed: int
    initial: np.ndarray


@dataclass
class StartOutcome:
    index: int
    seed: int
    status: str
    objective: float = float("nan")
    grad_norm: float = float("nan")
    iterations: int = 0
    support_numbers: np.ndarray | None = None
    trace: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    error: str | None = None

    def to_document(self) -> dict:
        return {
            "index": self.index,
            "seed": self.seed,
            "status": self.status,
            "objective": self.objective,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "support_numbers": None if self.support_numbers is None else self.support_numbers.tolist(),
            "diagnostics": list(self.diagnostics),
            "error": self.error,
        }


@dataclass
class StartRunner:
    """Runs one descent per pushed start on a thread pool.

    Each start is independent and deterministic from its seed, so the
    outcomes do not depend on scheduling. A start that raises is logged
    with its traceback and recorded as failed; the remaining starts keep
    running.

    """
    descend: Callable[[StartState], StartOutcome]
    states: list[StartState] = field(default_factory=list)
    workers: int | None = None

    def push(self, index: int, seed: int, initial: np.ndarray):
        """Queues a start to be run by `run()`."""
        self.states.append(StartState(index, seed, np.asarray(initial, dtype=float)))

    def _guarded(self, state: StartState) -> StartOutcome:
        try:
            return self.descend(state)
        except Exception as e:
            logger.error("start %d (seed %d) failed:\n%s", state.index, state.seed,
                         "".join(traceback.format_exception(type(e), e, e.__traceback__)))
            return StartOutcome(state.index, state.seed, status="failed", error=f"{type(e).__name__}: {e}")

    def run(self) -> list[StartOutcome]:
        """Runs every queued start and returns the outcomes in push order.

        :raises RuntimeError:
            No start was pushed.

        """
        if not self.states:
            raise RuntimeError('no start has been pushed')
        if len(self.states) == 1:
            return [self._guarded(self.states[0])]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(self._guarded, self.states))
