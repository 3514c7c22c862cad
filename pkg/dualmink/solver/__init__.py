from .Functionals import Evaluation, Problem, gradient, objective_J, objective_Jtilde
from .SolveConfig import CONFIG_SCHEMA, InitMode, Normalization, SolveConfig, StepControl
from .Solver import (
    TRACE_COLUMNS,
    SolveReport,
    SolveStatus,
    TraceRow,
    Verification,
    descend,
    minimize,
    verify_solution,
)
from .StartRunner import StartOutcome, StartRunner, StartState
