"""Score-guided search over the solution space of a tunable program.

The first round samples uniformly (every option still carries MIN_SCORE).
Later rounds draw each site independently from a softmax over standardized
best-seen option scores; never-scored options borrow the site maximum so
they keep getting explored.  The loop stops once the global best has not
improved for more than ``k_stall`` consecutive rounds.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .priolang import (
    ConcreteProgram,
    EvalError,
    SourceProgram,
    StepLimitExceeded,
    TunableProgram,
    compact,
    solution_space_size,
    substitute,
)

log = logging.getLogger(__name__)

MIN_SCORE = -1e10
STD_EPS = 1e-9


class ExhaustedError(RuntimeError):
    """No unvisited decision vector could be drawn."""


@dataclass
class XSearchConfig:
    batch_size: int = 64
    temperature: float = 1.0
    k_stall: int = 3
    top_k: int = 1
    max_sample_attempts: Optional[int] = None  # default: 100 * batch_size
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.k_stall < 1 or self.top_k < 1:
            raise ValueError("batch_size, k_stall and top_k must all be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @property
    def attempts(self) -> int:
        if self.max_sample_attempts is not None:
            return self.max_sample_attempts
        return 100 * self.batch_size


class ScoreTable:
    """Best score seen for every (site, option) pair."""

    def __init__(self, option_counts):
        self.scores = [np.full(k, MIN_SCORE) for k in option_counts]

    @classmethod
    def for_program(cls, tp: TunableProgram) -> "ScoreTable":
        return cls([len(s.options) for s in tp.sites])

    def __len__(self):
        return len(self.scores)

    def update(self, dv, score: float):
        for site, j in enumerate(dv):
            if score > self.scores[site][j]:
                self.scores[site][j] = score

    def probabilities(self, temperature: float = 1.0) -> list[np.ndarray]:
        return [site_probabilities(s, temperature) for s in self.scores]


def softmax(z: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    z = np.asarray(z, dtype=float) / temperature
    e = np.exp(z - z.max())
    return e / e.sum()


def site_probabilities(scores: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    s = np.array(scores, dtype=float)
    s[s == MIN_SCORE] = s.max()
    std = s.std()
    if std == 0.0:
        return np.full(len(s), 1.0 / len(s))
    return softmax((s - s.mean()) / (std + STD_EPS), temperature)


@dataclass
class StallState:
    k_stall: int
    global_best: Optional[float] = None
    no_update: int = 0


def sample_batch(table: ScoreTable, visited: dict, cfg: XSearchConfig,
                 rng: np.random.Generator, space_size: Optional[int] = None) -> list[tuple]:
    if space_size is not None and len(visited) >= space_size:
        raise ExhaustedError("solution space fully searched")
    probs = table.probabilities(cfg.temperature)
    batch: list[tuple] = []
    seen: set = set()
    attempts = 0
    while len(batch) < cfg.batch_size and attempts < cfg.attempts:
        chunk = min(cfg.batch_size, cfg.attempts - attempts)
        cols = [rng.choice(len(p), size=chunk, p=p) for p in probs]
        for r in range(chunk):
            attempts += 1
            dv = tuple(int(c[r]) for c in cols)
            if dv in visited or dv in seen:
                continue
            seen.add(dv)
            batch.append(dv)
            if len(batch) == cfg.batch_size:
                break
        if space_size is not None and len(visited) + len(batch) >= space_size:
            break
    if not batch:
        raise ExhaustedError(f"no unvisited vector in {attempts} draws")
    return batch


def apply_scores(results, table: ScoreTable, visited: dict, state: StallState) -> bool:
    """Record a batch of ``(dv, score_or_None)``; return True to terminate."""
    batch_best = None
    for dv, score in results:
        visited[dv] = score
        if score is None:
            continue
        table.update(dv, score)
        if batch_best is None or score > batch_best:
            batch_best = score
    if batch_best is not None and (state.global_best is None or batch_best > state.global_best):
        state.global_best = batch_best
        state.no_update = 0
    else:
        state.no_update += 1
    return state.no_update > state.k_stall


@dataclass
class XSearchOutcome:
    best_score: Optional[float]
    best_program: Optional[ConcreteProgram]
    compacted: Optional[SourceProgram]
    evaluations_used: int
    rounds: int
    evaluated: list = field(default_factory=list, repr=False)  # (dv, score) in order
    history: list = field(default_factory=list, repr=False)
    table: Optional[ScoreTable] = field(default=None, repr=False)

    @property
    def failed(self) -> bool:
        return self.best_score is None


def _score(tp: TunableProgram, evaluate: Callable, dv) -> Optional[float]:
    cp = substitute(tp, dv)
    try:
        s = evaluate(cp)
    except (EvalError, StepLimitExceeded):
        return None
    return None if s is None else float(s)


def run(tp: TunableProgram, evaluate: Callable[[ConcreteProgram], Optional[float]],
        cfg: XSearchConfig | None = None, executor=None) -> XSearchOutcome:
    """Search ``tp``'s solution space with ``evaluate`` and compact the result.

    ``evaluate`` returns a score or None for an invalid program.  With an
    ``executor`` each batch is mapped through it; results are still applied
    in batch order.
    """
    cfg = cfg or XSearchConfig()
    rng = np.random.default_rng(cfg.seed)
    table = ScoreTable.for_program(tp)
    visited: dict = {}
    state = StallState(cfg.k_stall)
    size = solution_space_size(tp)
    evaluated: list = []
    history: list = []
    rounds = 0
    while True:
        try:
            batch = sample_batch(table, visited, cfg, rng, size)
        except ExhaustedError:
            break
        rounds += 1
        if executor is None:
            scores = [_score(tp, evaluate, dv) for dv in batch]
        else:
            scores = list(executor.map(_score, [tp] * len(batch), [evaluate] * len(batch), batch))
        results = list(zip(batch, scores))
        evaluated.extend(results)
        stop = apply_scores(results, table, visited, state)
        record = {"round": rounds, "best": state.global_best, "evaluations": len(evaluated)}
        history.append(record)
        log.info(json.dumps(record))
        if stop:
            break

    valid = [(i, dv, s) for i, (dv, s) in enumerate(evaluated) if s is not None]
    if not valid:
        return XSearchOutcome(None, None, None, len(evaluated), rounds, evaluated, history, table)
    ranked = sorted(valid, key=lambda t: (-t[2], t[0]))
    top = [dv for _, dv, _ in ranked[:cfg.top_k]]
    best_dv, best = ranked[0][1], ranked[0][2]
    return XSearchOutcome(best, substitute(tp, best_dv), compact(tp, top),
                          len(evaluated), rounds, evaluated, history, table)
