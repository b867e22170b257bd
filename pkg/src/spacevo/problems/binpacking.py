"""Online bin packing: simulator, classic rules, L2 bound and datasets."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..priolang import EvalError, StepLimitExceeded
from .base import priority_fn


class ItemOversize(ValueError):
    pass


class ZeroBound(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class BinPackInstance:
    capacity: int
    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(int(x) for x in self.items))
        if self.capacity < 1:
            raise ValueError("capacity must be positive")
        for it in self.items:
            if it < 1:
                raise ValueError(f"item size {it} is not positive")
            if it > self.capacity:
                raise ItemOversize(f"item {it} exceeds capacity {self.capacity}")

    def to_dict(self) -> dict:
        return {"capacity": self.capacity, "items": list(self.items)}


@dataclass
class HeuristicContext:
    bins_remaining: list
    capacity: int

    @property
    def bins_max(self) -> float:
        return max(self.bins_remaining) if self.bins_remaining else 0

    @property
    def num_bins(self) -> int:
        return len(self.bins_remaining)


def simulate_online(priority, inst: BinPackInstance, return_bins: bool = False):
    """Pack items in arrival order, each into the feasible open bin of highest
    priority (lowest index on ties), or a fresh bin when none fits.

    The priority is called as ``(item, bin_remaining, bins_max, num_bins,
    capacity)`` once per feasible bin.  Returns the bin count, or the final
    remaining capacities with ``return_bins``.
    """
    fn = priority_fn(priority)
    cap = float(inst.capacity)
    ctx = HeuristicContext([], inst.capacity)
    bins = ctx.bins_remaining
    for item in inst.items:
        if item > inst.capacity:
            raise ItemOversize(f"item {item} exceeds capacity {inst.capacity}")
        feasible = [i for i, r in enumerate(bins) if r >= item]
        if not feasible:
            bins.append(inst.capacity - item)
            continue
        args = (float(item), None, float(ctx.bins_max), float(ctx.num_bins), cap)
        best_i, best_p = None, None
        for i in feasible:
            p = fn(args[0], float(bins[i]), *args[2:])
            if best_p is None or p > best_p:
                best_i, best_p = i, p
        bins[best_i] -= item
    return list(bins) if return_bins else len(bins)


def _check(inst: BinPackInstance):
    for it in inst.items:
        if it > inst.capacity:
            raise ItemOversize(f"item {it} exceeds capacity {inst.capacity}")


def first_fit(inst: BinPackInstance) -> int:
    _check(inst)
    bins: list[int] = []
    for item in inst.items:
        for i, r in enumerate(bins):
            if r >= item:
                bins[i] -= item
                break
        else:
            bins.append(inst.capacity - item)
    return len(bins)


def best_fit(inst: BinPackInstance) -> int:
    _check(inst)
    bins: list[int] = []
    for item in inst.items:
        best = None
        for i, r in enumerate(bins):
            if r >= item and (best is None or r < bins[best]):
                best = i
        if best is None:
            bins.append(inst.capacity - item)
        else:
            bins[best] -= item
    return len(bins)


def l2_lower_bound(inst: BinPackInstance) -> int:
    """Martello and Toth's L2 bound."""
    c = inst.capacity
    items = inst.items
    if not items:
        return 0
    best = math.ceil(sum(items) / c)
    for k in {0} | {w for w in items if 2 * w <= c}:
        j1 = [w for w in items if w > c - k]
        j2 = [w for w in items if c - k >= w and 2 * w > c]
        j3 = [w for w in items if 2 * w <= c and w >= k]
        spare = len(j2) * c - sum(j2)
        best = max(best, len(j1) + len(j2) + max(0, math.ceil((sum(j3) - spare) / c)))
    return best


def excess_score(results: Sequence[int], bounds: Sequence[int]) -> float:
    if len(results) != len(bounds):
        raise ValueError("results and bounds differ in length")
    total = sum(bounds)
    if total == 0:
        raise ZeroBound("sum of lower bounds is zero")
    return (sum(results) - total) / total


class BinPackingEvaluator:
    """Negated excess over L2 across a fixed instance list."""

    def __init__(self, instances: Sequence[BinPackInstance]):
        self.instances = list(instances)
        self.bounds = [l2_lower_bound(i) for i in self.instances]

    def __call__(self, program) -> Optional[float]:
        try:
            used = [simulate_online(program, inst) for inst in self.instances]
        except (EvalError, StepLimitExceeded):
            return None
        return -excess_score(used, self.bounds)


OR_CAPACITY = 150
OR_RANGE = (20, 100)
WEIBULL_SCALE = 45.0
WEIBULL_SHAPE = 3.0
WEIBULL_CAPACITY = 100


def gen_or_dataset(seed: int, num_instances: int = 20,
                   items_per_instance: int = 120) -> list[BinPackInstance]:
    rng = np.random.default_rng(seed)
    lo, hi = OR_RANGE
    return [BinPackInstance(OR_CAPACITY, rng.integers(lo, hi, size=items_per_instance,
                                                      endpoint=True))
            for _ in range(num_instances)]


def weibull_items(rng: np.random.Generator, size: int) -> np.ndarray:
    raw = WEIBULL_SCALE * rng.weibull(WEIBULL_SHAPE, size=size)
    return np.clip(np.round(np.minimum(raw, WEIBULL_CAPACITY)), 1, WEIBULL_CAPACITY).astype(int)


def gen_weibull_dataset(seed: int, num_instances: int = 5,
                        items_per_instance: int = 5000) -> list[BinPackInstance]:
    rng = np.random.default_rng(seed)
    return [BinPackInstance(WEIBULL_CAPACITY, weibull_items(rng, items_per_instance))
            for _ in range(num_instances)]


def save_instances(instances: Sequence[BinPackInstance], path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([i.to_dict() for i in instances], fh)


def load_instances(path: str | os.PathLike) -> list[BinPackInstance]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    try:
        return [BinPackInstance(int(d["capacity"]), d["items"]) for d in data]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed instance: {exc}") from None
