"""Constrained multi-objective Bayesian optimization with entropy search
over the Pareto front."""

from paretomax.core import (
    BlackBoxId,
    BoxKind,
    HyperSampling,
    Method,
    ObservationSet,
    ProblemSpec,
    RunConfig,
    constraint,
    make_problem,
    objective,
)
from paretomax.loop import (
    ProblemFamily,
    TrueProblem,
    make_builtin_problem,
    make_rff_problem,
    run_benchmark,
    run_single,
)

__all__ = [
    "BlackBoxId",
    "BoxKind",
    "HyperSampling",
    "Method",
    "ObservationSet",
    "ProblemFamily",
    "ProblemSpec",
    "RunConfig",
    "TrueProblem",
    "constraint",
    "make_builtin_problem",
    "make_problem",
    "make_rff_problem",
    "objective",
    "run_benchmark",
    "run_single",
]

__version__ = "0.1.0"
