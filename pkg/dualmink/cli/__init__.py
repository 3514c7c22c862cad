from .Cli import ExitCode, cmd_check, cmd_curvature, cmd_estimate, cmd_selftest, cmd_solve, main, run
from .SelfTest import FAULTS, InvariantResult, SelfTestReport, run_selftest
