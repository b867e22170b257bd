"""Independent sets in strong powers of odd cycles."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import GreedyEvaluator
from .capset import greedy_order

BRUTE_FORCE_CAP = 60


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class CycleProductSpec:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 3 or self.m % 2 == 0 or self.n < 1:
            raise ValueError(f"need odd m >= 3 and n >= 1, got m={self.m}, n={self.n}")

    @property
    def num_vertices(self) -> int:
        return self.m ** self.n


def strong_product_adjacent(u, v, m: int) -> bool:
    if tuple(u) == tuple(v):
        return False
    return all(a == b or (a - b) % m in (1, m - 1) for a, b in zip(u, v))


def vertices(spec: CycleProductSpec) -> list[tuple]:
    return list(itertools.product(range(spec.m), repeat=spec.n))


def _offsets(n: int) -> np.ndarray:
    offs = np.array(list(itertools.product((-1, 0, 1), repeat=n)), dtype=np.int64)
    return offs[np.any(offs != 0, axis=1)]


def find_adjacent_pair(vertex_set, spec: CycleProductSpec) -> Optional[tuple]:
    vs = list(dict.fromkeys(tuple(int(x) for x in v) for v in vertex_set))
    for v in vs:
        if len(v) != spec.n or any(not 0 <= x < spec.m for x in v):
            raise ValueError(f"{list(v)} is not a vertex of C_{spec.m}^{spec.n}")
    members = set(vs)
    offs = _offsets(spec.n)
    for v in vs:
        for u in map(tuple, (np.array(v) + offs) % spec.m):
            if u in members and u != v:
                return (v, u)
    return None


def is_independent(vertex_set, spec: CycleProductSpec) -> bool:
    return find_adjacent_pair(vertex_set, spec) is None


def greedy_independent_set(priority, spec: CycleProductSpec) -> list[tuple]:
    """Scan vertices by priority; admitting one blocks its closed neighbourhood."""
    vs = vertices(spec)
    order = greedy_order(priority, vs, spec.m, spec.n)
    powers = spec.m ** np.arange(spec.n - 1, -1, -1, dtype=np.int64)
    offs = _offsets(spec.n)
    blocked = np.zeros(len(vs), dtype=bool)
    chosen = []
    for i in order:
        if blocked[i]:
            continue
        chosen.append(vs[i])
        blocked[i] = True
        blocked[((np.array(vs[i]) + offs) % spec.m) @ powers] = True
    return chosen


def independent_set_evaluator(spec: CycleProductSpec) -> GreedyEvaluator:
    return GreedyEvaluator(lambda p: greedy_independent_set(p, spec))


def brute_force_alpha(spec: CycleProductSpec) -> int:
    """Exact independence number by branch and bound on bitmasks.

    Vertices with no remaining neighbours are taken outright; otherwise the
    highest-degree vertex is branched on.  A greedy clique cover of the
    candidate set bounds what the branch can still add.
    """
    size = spec.num_vertices
    if size > BRUTE_FORCE_CAP:
        raise TooLarge(f"{size} vertices exceeds the brute-force cap of {BRUTE_FORCE_CAP}")
    vs = vertices(spec)
    nbr = [0] * size
    for i, j in itertools.combinations(range(size), 2):
        if strong_product_adjacent(vs[i], vs[j], spec.m):
            nbr[i] |= 1 << j
            nbr[j] |= 1 << i

    def members(mask):
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def clique_cover(mask):
        count = 0
        while mask:
            v = (mask & -mask).bit_length() - 1
            clique = 1 << v
            cand = mask & nbr[v]
            while cand:
                u = (cand & -cand).bit_length() - 1
                clique |= 1 << u
                cand &= nbr[u]
            mask &= ~clique
            count += 1
        return count

    best = 0

    def search(mask, taken):
        nonlocal best
        while True:
            isolated = [v for v in members(mask) if not nbr[v] & mask]
            if not isolated:
                break
            for v in isolated:
                mask &= ~(1 << v)
            taken += len(isolated)
        if not mask:
            best = max(best, taken)
            return
        if taken + clique_cover(mask) <= best:
            return
        v = max(members(mask), key=lambda x: bin(nbr[x] & mask).count("1"))
        search(mask & ~(1 << v) & ~nbr[v], taken + 1)
        search(mask & ~(1 << v), taken)

    search((1 << size) - 1, 0)
    return best
