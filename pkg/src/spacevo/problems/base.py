"""Shared evaluator plumbing."""
from __future__ import annotations

from typing import Callable, Optional, Protocol

from ..priolang import ConcreteProgram, EvalError, StepLimitExceeded


class ProblemEvaluator(Protocol):
    def __call__(self, program: ConcreteProgram) -> Optional[float]:
        """Score of ``program``, or None if it is invalid."""


def priority_fn(priority) -> Callable:
    """Host callable for a ConcreteProgram or a plain Python function.

    Arguments must already be interpreter values (floats / tuples of floats).
    """
    if isinstance(priority, ConcreteProgram):
        return priority.function
    return priority


class GreedyEvaluator:
    """Wrap a ``build(priority) -> solution`` and a ``score(solution)``.

    Interpreter failures make the program invalid (None).
    """

    def __init__(self, build: Callable, score: Callable = len):
        self.build = build
        self.score = score

    def __call__(self, program: ConcreteProgram) -> Optional[float]:
        try:
            return float(self.score(self.build(program)))
        except (EvalError, StepLimitExceeded):
            return None


class ToyEvaluator:
    """Scores a zero-argument program by its return value."""

    def __call__(self, program: ConcreteProgram) -> Optional[float]:
        try:
            return program.function()
        except (EvalError, StepLimitExceeded):
            return None
