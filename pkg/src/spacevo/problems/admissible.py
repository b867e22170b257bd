"""Constant-weight admissible sets over {0,1,2}^n."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import GreedyEvaluator
from .capset import greedy_order


@dataclass(frozen=True)
class AdmissibleParams:
    n: int
    w: int

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.w <= self.n:
            raise ValueError(f"need n >= 1 and 0 <= w <= n, got n={self.n}, w={self.w}")


@dataclass(frozen=True)
class WeightViolation:
    vector: tuple
    weight: int

    def __str__(self):
        return f"WeightViolation: {list(self.vector)} has weight {self.weight}"


@dataclass(frozen=True)
class TripleViolation:
    triple: tuple

    def __str__(self):
        return "TripleViolation: " + ", ".join(str(list(v)) for v in self.triple)


class DistinctCoordinate:
    """Some coordinate carries 0, 1 and 2 across the triple."""

    name = "distinct"

    def holds(self, a, b, c) -> np.ndarray:
        ok = (a != b) & (a != c) & (b != c)
        return ok.any(axis=-1)


class DistinctOrZeroPair(DistinctCoordinate):
    """Some coordinate carries {0,1,2}, {0,0,1} or {0,0,2}."""

    name = "zero-pair"

    def holds(self, a, b, c) -> np.ndarray:
        zeros = (a == 0).astype(int) + (b == 0) + (c == 0)
        ok = ((a != b) & (a != c) & (b != c)) | (zeros == 2)
        return ok.any(axis=-1)


PREDICATES = {p.name: p for p in (DistinctCoordinate(), DistinctOrZeroPair())}
DEFAULT_PREDICATE = PREDICATES["distinct"]


def candidates(params: AdmissibleParams) -> list[tuple]:
    """Weight-w vectors in lexicographic order."""
    return [v for v in itertools.product((0, 1, 2), repeat=params.n)
            if sum(x != 0 for x in v) == params.w]


def check_admissible(vectors, params: AdmissibleParams,
                     predicate=DEFAULT_PREDICATE):
    """First violation found (weight first, then triples), or None."""
    vecs = list(dict.fromkeys(tuple(int(x) for x in v) for v in vectors))
    for v in vecs:
        if len(v) != params.n or any(x not in (0, 1, 2) for x in v):
            raise ValueError(f"{list(v)} is not a vector in {{0,1,2}}^{params.n}")
        weight = sum(x != 0 for x in v)
        if weight != params.w:
            return WeightViolation(v, weight)
    arr = np.array(vecs, dtype=np.int64).reshape(len(vecs), params.n)
    for i in range(len(vecs)):
        for j in range(i + 1, len(vecs) - 1):
            rest = arr[j + 1:]
            ok = predicate.holds(arr[i], arr[j], rest)
            if not ok.all():
                k = j + 1 + int(np.argmin(ok))
                return TripleViolation((vecs[i], vecs[j], vecs[k]))
    return None


def is_admissible(vectors, params: AdmissibleParams, predicate=DEFAULT_PREDICATE) -> bool:
    return check_admissible(vectors, params, predicate) is None


def greedy_admissible(priority, params: AdmissibleParams,
                      predicate=DEFAULT_PREDICATE) -> list[tuple]:
    cands = candidates(params)
    order = greedy_order(priority, cands, params.n, params.w)
    arr = np.array(cands, dtype=np.int64).reshape(len(cands), params.n)
    chosen: list[int] = []
    for idx in order:
        if len(chosen) >= 2:
            s = arr[chosen]
            iu, ju = np.triu_indices(len(chosen), k=1)
            if not predicate.holds(s[iu], s[ju], arr[idx]).all():
                continue
        chosen.append(int(idx))
    return [cands[i] for i in chosen]


def admissible_evaluator(params: AdmissibleParams, predicate=DEFAULT_PREDICATE):
    return GreedyEvaluator(lambda p: greedy_admissible(p, params, predicate))
