"""Evaluators, verifiers and generators for the supported problems.

``make_problem(name, **params)`` returns a :class:`Problem` bundling the
evaluator with its prompt template name and hyperparameter defaults.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .admissible import (
    DEFAULT_PREDICATE,
    PREDICATES,
    AdmissibleParams,
    TripleViolation,
    WeightViolation,
    admissible_evaluator,
    check_admissible,
    greedy_admissible,
    is_admissible,
)
from .base import GreedyEvaluator, ProblemEvaluator, ToyEvaluator, priority_fn
from .binpacking import (
    BinPackingEvaluator,
    BinPackInstance,
    HeuristicContext,
    ItemOversize,
    ZeroBound,
    best_fit,
    excess_score,
    first_fit,
    gen_or_dataset,
    gen_weibull_dataset,
    l2_lower_bound,
    load_instances,
    save_instances,
    simulate_online,
)
from .bound import BoundResult, capacity_lower_bound
from .capset import (
    DimensionMismatch,
    capset_evaluator,
    find_collinear_triple,
    greedy_capset,
    is_capset,
)
from .cyclegraph import (
    CycleProductSpec,
    TooLarge,
    brute_force_alpha,
    find_adjacent_pair,
    greedy_independent_set,
    independent_set_evaluator,
    is_independent,
    strong_product_adjacent,
)

PROBLEMS = ("capset", "admissible", "cyclegraph", "binpacking-or", "binpacking-weibull", "toy")


@dataclass
class Problem:
    name: str
    evaluator: Callable
    template: str
    params: dict = field(default_factory=dict)
    k_stall: int = 3
    k_reset: Optional[int] = 1600  # None disables halving
    hint: Optional[str] = None


SHANNON_HINT = ("The score is computed based on the relationships among el[i], el[-i], "
                "el[(i - k) % n], and el[(i + k) % n].")


def make_problem(name: str, n: Optional[int] = None, w: Optional[int] = None,
                 m: Optional[int] = None, dataset=None, seed: int = 0,
                 predicate: str = "distinct") -> Problem:
    """Build a problem; raises ValueError on missing or bad parameters."""
    if name == "capset":
        if n is None:
            raise ValueError("capset needs --n")
        small = n <= 7
        return Problem(name, capset_evaluator(n), "capset", {"n": n},
                       k_stall=5 if small else 3, k_reset=1600 if small else 3200)
    if name == "admissible":
        if n is None or w is None:
            raise ValueError("admissible needs --n and --w")
        if predicate not in PREDICATES:
            raise ValueError(f"unknown predicate {predicate!r}")
        params = AdmissibleParams(n, w)
        return Problem(name, admissible_evaluator(params, PREDICATES[predicate]), "admissible",
                       {"n": n, "w": w})
    if name == "cyclegraph":
        if m is None or n is None:
            raise ValueError("cyclegraph needs --m and --n")
        spec = CycleProductSpec(m, n)
        return Problem(name, independent_set_evaluator(spec), "cyclegraph", {"m": m, "n": n},
                       hint=SHANNON_HINT)
    if name in ("binpacking-or", "binpacking-weibull"):
        if dataset is not None:
            instances = load_instances(dataset) if isinstance(dataset, str) else list(dataset)
        elif name == "binpacking-or":
            instances = gen_or_dataset(seed)
        else:
            instances = gen_weibull_dataset(seed)
        return Problem(name, BinPackingEvaluator(instances), name,
                       {"instances": len(instances)}, k_reset=None)
    if name == "toy":
        return Problem(name, ToyEvaluator(), "toy", {})
    raise ValueError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}")
