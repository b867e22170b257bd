"""A small Python-subset language for priority functions with ``tunable`` sites."""
from .errors import EvalError, ParseError, StepLimitExceeded, TunableError
from .interp import DEFAULT_STEP_BUDGET, to_value
from .render import render_function
from .tunable import (
    ConcreteProgram,
    SourceProgram,
    TunableProgram,
    TunableSite,
    canonical_source,
    check_decisions,
    compact,
    concrete,
    eval_priority,
    parse,
    solution_space_size,
    substitute,
)

__all__ = [
    "ConcreteProgram", "DEFAULT_STEP_BUDGET", "EvalError", "ParseError", "SourceProgram",
    "StepLimitExceeded", "TunableError", "TunableProgram", "TunableSite", "canonical_source",
    "check_decisions", "compact", "concrete", "eval_priority", "parse", "render_function",
    "solution_space_size", "substitute", "to_value",
]
