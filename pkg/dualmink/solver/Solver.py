import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..bodies.StarBody import StarBody
from ..bodies.SupportPolytope import SupportPolytope
from ..checks.Preconditions import PreconditionReport, evaluate_preconditions
from ..config import tolerances
from ..errors import OffGridEvaluationError, UnboundedPolytopeError
from ..measures.DiscreteMeasure import DiscreteMeasure, atom_errors, total_variation_distance
from ..measures.DualMeasures import dual_curvature_measure, dual_mixed_volume, min_radial
from ..sphere.SphereGrid import SphereGrid
from .Functionals import Evaluation, Problem
from .SolveConfig import InitMode, SolveConfig
from .StartRunner import StartOutcome, StartRunner, StartState

logger = logging.getLogger(__name__)

# smallest trial step before the line search gives up
MIN_STEP = 1e-14
# spread of the log-normal perturbation applied to starts after the first
START_SPREAD = 0.25
# iterations between checks that the objective is still decreasing
STALL_WINDOW = 50
# a window that lowers J by less than this, relative to max(1, |J|), has stalled
STALL_DECREASE = 1e-12
# measured binning noise is scaled by this before it bounds the gradient norm
NOISE_FACTOR = 2.0

TRACE_COLUMNS = ["iter", "J", "grad_norm", "step"]


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    REFUSED = "refused_preconditions"


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    grad_norm: float
    step: float

    def as_row(self) -> list:
        return [self.iteration, self.objective, self.grad_norm, self.step]


@dataclass(frozen=True)
class Verification:
    residual: float
    atom_errors: np.ndarray
    measure: DiscreteMeasure

    def to_document(self) -> dict:
        return {"residual": self.residual, "atom_errors": self.atom_errors.tolist()}


@dataclass
class SolveReport:
    status: SolveStatus
    config: SolveConfig
    grid: dict
    preconditions: PreconditionReport
    solution: SupportPolytope | None = None
    scale: float = 1.0
    residual: float | None = None
    atom_errors: np.ndarray | None = None
    trace: list[TraceRow] = field(default_factory=list)
    basins: list[StartOutcome] = field(default_factory=list)
    elongation: float | None = None
    warnings: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def objective_trace(self) -> list[float]:
        return [row.objective for row in self.trace]

    @property
    def gradient_trace(self) -> list[float]:
        return [row.grad_norm for row in self.trace]

    @property
    def accepted(self) -> bool:
        """ Converged with the residual inside the configured bound """
        return (self.status is SolveStatus.CONVERGED and self.residual is not None
                and self.residual <= self.config.residual_bound)

    def to_document(self) -> dict:
        return {
            "schema": "dualmink.report/1",
            "dim": self.grid["dim"],
            "status": self.status.value,
            "config": self.config.to_document(),
            "grid": self.grid,
            "scale": self.scale,
            "residual": self.residual,
            "atom_errors": None if self.atom_errors is None else self.atom_errors.tolist(),
            "elongation": self.elongation,
            "objective_trace": self.objective_trace,
            "gradient_trace": self.gradient_trace,
            "solution": None if self.solution is None else self.solution.to_document(),
            "preconditions": self.preconditions.to_document(),
            "basins": [outcome.to_document() for outcome in self.basins],
            "warnings": list(self.warnings),
            "diagnostics": list(self.diagnostics),
        }


# ---------------------------------------------------------------------- #
# Verification

def verify_solution(K: SupportPolytope, Q: StarBody, q: float, mu: DiscreteMeasure,
                    grid: SphereGrid, tol: float = tolerances.MATCHING) -> Verification:
    """
    Residual of C̃_q(K, Q, ·) = μ: the total variation distance divided by
    |μ|, and the signed error C̃_q(K, Q, {x_i}) - α_i per atom of K.
    """
    achieved = dual_curvature_measure(K, Q, q, grid)
    residual = total_variation_distance(achieved, mu, tol) / mu.total
    return Verification(residual=residual, atom_errors=atom_errors(achieved, mu, tol),
                        measure=achieved)


# ---------------------------------------------------------------------- #
# Descent

def _symmetrize(values: np.ndarray, pairs: np.ndarray | None) -> np.ndarray:
    if pairs is None:
        return values
    return (values + values[pairs]) / 2


def _normalize(s: np.ndarray) -> np.ndarray:
    """ max h = 1 in log coordinates """
    return s - s.max()


def _node_floor(problem: Problem, ev: Evaluation, h: np.ndarray) -> float:
    """ Gradient jump when a single node changes facet, scaled by √N """
    jump = max(abs(problem.q), 1.0) * ev.node_share
    return jump * math.sqrt(len(h)) / float(h.min())


def _quadrature_floor(problem: Problem, ev: Evaluation, h: np.ndarray) -> float:
    """
    Gradient norm the grid cannot resolve: the measured binning noise
    when Q can be evaluated off the grid, the single-node bound otherwise.
    """
    noise = problem.gradient_noise(h, ev)
    return NOISE_FACTOR * noise if noise is not None else _node_floor(problem, ev, h)


def _stop_at_floor(ev: Evaluation, floor: float, config: SolveConfig, iteration: int,
                   reason: str, diagnostics: list[str]) -> SolveStatus:
    if ev.grad_norm <= max(config.tolerance, floor):
        diagnostics.append(
            f"stopped at iteration {iteration} at quadrature resolution ({reason}): "
            f"gradient norm {ev.grad_norm:.3g} within the grid floor {floor:.3g}")
        return SolveStatus.CONVERGED
    diagnostics.append(f"{reason} at iteration {iteration} (gradient norm {ev.grad_norm:.3g}, "
                       f"grid floor {floor:.3g})")
    return SolveStatus.MAX_ITER


def descend(problem: Problem, state: StartState, config: SolveConfig) -> StartOutcome:

    """
    Armijo backtracking descent in s = log h. The direction is the gradient
    in the metric Σ α_i ds_i², that is d_i = -(∂J/∂s_i) / α_i, which moves
    each facet by its relative mass defect 1 - share_i / α_i; the first
    trial step is the Barzilai-Borwein step in the same metric. Positivity
    holds by construction and max h = 1 is restored after every step,
    leaving the degree-zero objective unchanged. Trial points below h_min
    are rejected.

    The discrete objective is only piecewise smooth. When the line search
    fails or the objective stops decreasing, the run counts as converged if
    the gradient norm lies within the quadrature floor of the grid.
    """

    control = config.step
    pairs = problem.pairs if config.enforce_even and problem.mu.even else None
    alpha = problem.alpha
    s = _normalize(_symmetrize(np.log(state.initial), pairs))
    h = np.exp(s)
    ev = problem.evaluate(h)
    trace = [TraceRow(0, ev.objective, ev.grad_norm, 0.0)]
    diagnostics: list[str] = []
    status = SolveStatus.MAX_ITER
    previous = None
    step = control.initial_step

    for iteration in range(1, config.max_iters + 1):
        if ev.grad_norm <= config.tolerance:
            status = SolveStatus.CONVERGED
            break
        if iteration > STALL_WINDOW and iteration % STALL_WINDOW == 1:
            decrease = trace[-1 - STALL_WINDOW].objective - ev.objective
            if decrease <= STALL_DECREASE * max(1.0, abs(ev.objective)):
                status = _stop_at_floor(ev, _quadrature_floor(problem, ev, h), config, iteration,
                                        f"objective fell {decrease:.3g} over {STALL_WINDOW} iterations",
                                        diagnostics)
                break

        g = _symmetrize(h * ev.gradient, pairs)
        direction = _symmetrize(-g / alpha, pairs)
        slope = float(-(g @ direction))
        if previous is not None:
            ds, dg = s - previous[0], g - previous[1]
            ds = ds - float(alpha @ ds)
            curvature = float(ds @ dg)
            step = float(alpha @ (ds * ds)) / curvature if curvature > 0 else control.initial_step
            step = min(max(step, 1e-8), 1e8)

        trial_step, accepted, floor_hit = step, False, False
        while trial_step >= MIN_STEP:
            trial = _normalize(s + trial_step * direction)
            h_trial = np.exp(trial)
            if h_trial.min() < config.h_min:
                floor_hit = True
                trial_step *= control.backtracking
                continue
            ev_trial = problem.evaluate(h_trial)
            if ev_trial.objective <= ev.objective - control.sufficient_decrease * trial_step * slope:
                accepted = True
                break
            trial_step *= control.backtracking

        if not accepted:
            if floor_hit:
                diagnostics.append(
                    f"line search failed at iteration {iteration}: trial support numbers "
                    f"fell below h_min = {config.h_min:g}")
            else:
                status = _stop_at_floor(ev, _quadrature_floor(problem, ev, h), config, iteration,
                                        "line search found no decrease", diagnostics)
            break

        previous = (s, g)
        s, h, ev = trial, h_trial, ev_trial
        trace.append(TraceRow(iteration, ev.objective, ev.grad_norm, trial_step))
        logger.debug("start %d iter %d: J = %.12g, |grad| = %.3g, step = %.3g",
                     state.index, iteration, ev.objective, ev.grad_norm, trial_step)
    else:
        if ev.grad_norm <= config.tolerance:
            status = SolveStatus.CONVERGED
        else:
            diagnostics.append(f"reached {config.max_iters} iterations "
                               f"(gradient norm {ev.grad_norm:.3g})")

    return StartOutcome(
        index=state.index, seed=state.seed, status=status.value,
        objective=ev.objective, grad_norm=ev.grad_norm, iterations=len(trace) - 1,
        support_numbers=h, trace=trace, diagnostics=diagnostics)


def _initial_support(mu: DiscreteMeasure, config: SolveConfig) -> np.ndarray:
    if config.init is InitMode.WEIGHTS:
        return (mu.weights / mu.weights.max()) ** (1 / mu.dim)
    return np.ones(len(mu))


def _best(outcomes: list[StartOutcome]) -> StartOutcome | None:
    ranked = [o for o in outcomes if o.error is None]
    if not ranked:
        return None
    return min(ranked, key=lambda o: (o.status != SolveStatus.CONVERGED.value, o.objective, o.index))


def minimize(mu: DiscreteMeasure, Q: StarBody, config: SolveConfig,
             initial: np.ndarray | None = None) -> SolveReport:

    """
    Solve C̃_q(K, Q, ·) = μ over polytopes with normals at the atoms of μ.

    The existence hypotheses for the regime of q are checked first; a solve
    outside them is refused unless config.override_regime lifts an
    out-of-range finding, in which case a warning is recorded. The
    minimizer of J (or J̃ at q = 0) is then rescaled by
    c = (|μ| / Ṽ_q(K_h, Q))^{1/q}; at q = 0 the measure does not depend on
    scale and c = 1.

    Failures inside the solve are reported through the status, never raised.
    """

    n = mu.dim
    q = config.q
    grid = config.build_grid(n)
    logger.info("solving n=%d q=%g with %d atoms on a %s grid of %d nodes",
                n, q, len(mu), grid.kind.value, grid.size)

    try:
        Q.radial(grid.nodes)
    except OffGridEvaluationError as e:
        report = SolveReport(status=SolveStatus.REFUSED, config=config, grid=grid.descriptor(),
                             preconditions=evaluate_preconditions(mu, q))
        report.diagnostics.append(f"star body cannot be evaluated on the solve grid: {e}")
        logger.info("solve refused: star body is sampled on another grid")
        return report

    preconditions = evaluate_preconditions(mu, q, Q, grid)
    report = SolveReport(status=SolveStatus.REFUSED, config=config,
                         grid=grid.descriptor(), preconditions=preconditions)
    blocking = preconditions.blocking(config.override_regime)
    if blocking:
        report.diagnostics.extend(f"{f.name}: {f.detail}" for f in blocking)
        logger.info("solve refused: %s", ", ".join(f.name for f in blocking))
        return report
    for finding in preconditions.findings:
        message = f"outside the proven range, running on override: {finding.detail}"
        report.warnings.append(message)
        logger.warning(message)

    try:
        problem = Problem(mu, Q, q, grid)
    except UnboundedPolytopeError as e:
        report.diagnostics.append(f"atoms do not bound a polytope: {e}")
        return report

    if config.enforce_even and problem.pairs is None:
        report.warnings.append("enforce_even ignored: atoms are not closed under negation")
    elif config.enforce_even and not mu.even:
        report.warnings.append("enforce_even ignored: weights of antipodal atoms differ")

    base = _initial_support(mu, config) if initial is None else np.asarray(initial, dtype=float)
    runner = StartRunner(lambda state: descend(problem, state, config), workers=config.workers)
    for index in range(config.starts):
        start = base
        if index:
            rng = np.random.default_rng([config.seed, index])
            start = base * np.exp(START_SPREAD * rng.standard_normal(len(base)))
        runner.push(index, config.seed + index, start)
    report.basins = runner.run()

    best = _best(report.basins)
    if best is None:
        report.status = SolveStatus.MAX_ITER
        report.diagnostics.append("every start failed")
        return report
    report.status = SolveStatus(best.status)
    report.trace = best.trace
    report.diagnostics.extend(best.diagnostics)

    K = problem.body(best.support_numbers)
    if q != 0:
        volume = dual_mixed_volume(K, Q, q, grid).value
        report.scale = (mu.total / volume) ** (1 / q)
        K = K.scaled(report.scale)
    report.solution = K

    verification = verify_solution(K, Q, q, mu, grid)
    report.residual = verification.residual
    report.atom_errors = verification.atom_errors
    report.elongation = float(K.support_numbers.max()) / min_radial(K, grid)
    logger.info("solve %s after %d iterations: residual %.3g, scale %.6g",
                report.status.value, best.iterations, report.residual, report.scale)
    return report
