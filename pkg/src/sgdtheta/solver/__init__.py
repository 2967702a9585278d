"""SGD-theta iteration, step rules, stopping rules and telemetry."""

from .config import AdmissibilityReport, Selection, SolverConfig, StepRule, StopRule, check_admissibility
from .iteration import (
    CSV_HEADER,
    HistoryRecord,
    IterationState,
    RunHistory,
    cyclic_batch,
    initial_state,
    kaczmarz_step,
    landweber_step,
    presample_t_bar,
    run,
    sgd_theta_step,
)
from .steps import adaptive_step, step_size
from .system import EquationSystem

__all__ = [
    "AdmissibilityReport",
    "Selection",
    "SolverConfig",
    "StepRule",
    "StopRule",
    "check_admissibility",
    "CSV_HEADER",
    "HistoryRecord",
    "IterationState",
    "RunHistory",
    "cyclic_batch",
    "initial_state",
    "kaczmarz_step",
    "landweber_step",
    "presample_t_bar",
    "run",
    "sgd_theta_step",
    "adaptive_step",
    "step_size",
    "EquationSystem",
]
