"""Cap sets in F_3^n: verifier and priority-guided greedy construction."""
from __future__ import annotations

import itertools
from typing import Iterable, Optional

import numpy as np

from .base import GreedyEvaluator, priority_fn


class DimensionMismatch(ValueError):
    pass


def _as_array(vectors: Iterable) -> np.ndarray:
    vecs = [tuple(int(x) for x in v) for v in vectors]
    if not vecs:
        return np.zeros((0, 0), dtype=np.int64)
    n = len(vecs[0])
    if any(len(v) != n for v in vecs):
        raise DimensionMismatch("vectors do not all have the same length")
    arr = np.array(sorted(set(vecs)), dtype=np.int64).reshape(-1, n)
    if ((arr < 0) | (arr > 2)).any():
        raise ValueError("entries must lie in {0, 1, 2}")
    return arr


def find_collinear_triple(vectors) -> Optional[tuple]:
    """First triple of distinct vectors summing to zero mod 3, else None."""
    arr = _as_array(vectors)
    if len(arr) < 3:
        return None
    n = arr.shape[1]
    powers = 3 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    codes = arr @ powers
    index = {int(c): i for i, c in enumerate(codes)}
    for i in range(len(arr) - 1):
        third = (-(arr[i] + arr[i + 1:])) % 3 @ powers
        for off, c in enumerate(third):
            k = index.get(int(c))
            j = i + 1 + off
            if k is not None and k > j:
                return tuple(tuple(int(x) for x in arr[t]) for t in (i, j, k))
    return None


def is_capset(vectors) -> bool:
    return find_collinear_triple(vectors) is None


def all_vectors(n: int) -> list[tuple]:
    return list(itertools.product((0, 1, 2), repeat=n))


def greedy_order(priority, candidates: list[tuple], *extra) -> list[int]:
    """Candidate indices sorted by descending priority, ties to the lower index."""
    fn = priority_fn(priority)
    extra = tuple(float(x) for x in extra)
    scores = np.array([fn(tuple(float(x) for x in c), *extra) for c in candidates])
    return list(np.argsort(-scores, kind="stable"))


def greedy_capset(priority, n: int) -> list[tuple]:
    """Scan F_3^n by priority, keeping vectors that complete no line.

    On each insertion every point ``-(a + v)`` for existing ``a`` becomes
    blocked, so a candidate check is a single lookup.
    """
    vecs = all_vectors(n)
    order = greedy_order(priority, vecs, n)
    arr = np.array(vecs, dtype=np.int64).reshape(len(vecs), n)
    powers = 3 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    blocked = np.zeros(len(vecs), dtype=bool)
    chosen: list[int] = []
    for i in order:
        if blocked[i]:
            continue
        if chosen:
            blocked[((-(arr[chosen] + arr[i])) % 3) @ powers] = True
        blocked[i] = True
        chosen.append(int(i))
    return [vecs[i] for i in chosen]


def capset_evaluator(n: int) -> GreedyEvaluator:
    return GreedyEvaluator(lambda p: greedy_capset(p, n))
