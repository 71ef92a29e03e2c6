"""Simulation laboratory for nonlinear two-time-scale stochastic
approximation: coupled iteration engines, a problem catalog, step-size
schedule auditing, and Monte Carlo rate estimation."""

__version__ = "0.1.0"

from .core import (ProblemConstants, ProblemSpec, RngStream, gaussian,
                   validate_problem)
from .engine import (RunConfig, TrajectoryCapture, run_experiment,
                     run_replication, step_alternating, step_simultaneous)
from .metrics import (MomentSeries, SlopeReport, aggregate, fit_slope,
                      predict_rates, spectral_norm)
from .noise import NoiseModel, sample_noise
from .problems import get_problem, h_tilde, problem_ids
from .schedules import (ScheduleAudit, ScheduleBounds, StepSchedule,
                        audit_schedule, corollary_schedule, eval_schedule,
                        schedule_bounds)

__all__ = [
    "ProblemConstants", "ProblemSpec", "RngStream", "gaussian",
    "validate_problem", "RunConfig", "TrajectoryCapture", "run_experiment",
    "run_replication", "step_alternating", "step_simultaneous",
    "MomentSeries", "SlopeReport", "aggregate", "fit_slope",
    "predict_rates", "spectral_norm", "NoiseModel", "sample_noise",
    "get_problem", "h_tilde", "problem_ids", "ScheduleAudit",
    "ScheduleBounds", "StepSchedule", "audit_schedule",
    "corollary_schedule", "eval_schedule", "schedule_bounds",
]
