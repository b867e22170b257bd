"""Evolution loop: prompt, generate, search the generated space, store.

``K_search`` processes take turns issuing one model call each.  Every
``K_reset`` calls (counted over all processes) the weakest half is
restarted from the seed program with a fresh RNG stream.
"""
from __future__ import annotations

import json
import math
import os
import re
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from typing import Callable, Optional

import numpy as np

from . import xsearch
from .llm_gateway import (
    Backend,
    BudgetCounter,
    BudgetExhausted,
    ChatRequest,
    MalformedResponse,
    NoProgramFound,
    TransportError,
    extract_program,
)
from .priolang import ParseError, SourceProgram, canonical_source, parse
from .progdb import ProgramDatabase, ProgramEntry, SamplerConfig, sample_refs

OUTPUT_RESTRICTION = "Output Python code only, without any comments."


@dataclass
class PromptTemplate:
    problem_description: str
    evolution_instruction: str
    tunable_marker_instruction: str
    task_description: str
    scoring_heuristic_hint: Optional[str] = None
    output_restriction: str = OUTPUT_RESTRICTION

    def __post_init__(self):
        if self.output_restriction != OUTPUT_RESTRICTION:
            raise ValueError(f"output restriction must read {OUTPUT_RESTRICTION!r}")

    @classmethod
    def load(cls, name: str, hint: Optional[str] = None, directory=None) -> "PromptTemplate":
        """Merge ``common.json`` with ``<name>.json`` from the template dir.

        ``directory`` overrides the bundled templates; files missing there
        fall back to the bundled ones.
        """
        data: dict = {}
        for fname in ("common.json", f"{name}.json"):
            data.update(_read_template(fname, directory))
        if hint is not None:
            data["scoring_heuristic_hint"] = hint
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValueError(f"template {name!r} is incomplete: {exc}") from None


def _read_template(fname: str, directory) -> dict:
    if directory is not None:
        path = os.path.join(directory, fname)
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                return json.load(fh)
    res = resources.files("spacevo").joinpath("templates", fname)
    if not res.is_file():
        raise ValueError(f"no prompt template file {fname}")
    return json.loads(res.read_text(encoding="utf-8"))


_DEF_NAME = re.compile(r"^(\s*def\s+)\w+", re.M)


def rename_function(source: str, name: str) -> str:
    return _DEF_NAME.sub(lambda m: m.group(1) + name, source, count=1)


def build_prompt(refs, t: PromptTemplate) -> str:
    """Render the prompt; ``refs`` are shown in the order given."""
    task = t.task_description
    if t.scoring_heuristic_hint:
        task = f"{task} {t.scoring_heuristic_hint}"
    parts = [t.problem_description, t.evolution_instruction, t.tunable_marker_instruction, task]
    if refs:
        code = "\n\n".join(rename_function(r.source, f"priority_v{i}").rstrip()
                           for i, r in enumerate(refs))
        parts.append(f"Reference implementations:\n```python\n{code}\n```")
        parts.append(f"Write a new function `priority_v{len(refs)}` that improves on them.")
    parts.append(t.output_restriction)
    return "\n\n".join(parts) + "\n"


@dataclass
class EvolveConfig:
    k_search: int = 4
    k_reset: Optional[int] = 1600
    k_ref: int = 2
    k_cluster: int = 10
    k_stall: int = 3
    top_k: int = 1
    budget: int = 100
    batch_size: int = 64
    temperature: float = 1.0
    p0: float = 0.5
    seed: int = 0
    seed_program: Optional[SourceProgram] = None
    refs_order: str = "ascending"
    model: Optional[str] = None
    max_tokens: int = 2048

    def __post_init__(self):
        if self.k_search < 1:
            raise ValueError("k_search must be >= 1")
        if self.k_reset is not None and self.k_reset < 1:
            raise ValueError("k_reset must be >= 1")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.refs_order not in ("ascending", "descending"):
            raise ValueError("refs_order must be 'ascending' or 'descending'")
        SamplerConfig(self.k_cluster, self.k_ref, self.p0)
        self.xsearch_config(0)

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(self.k_cluster, self.k_ref, self.p0)

    def xsearch_config(self, seed: int) -> xsearch.XSearchConfig:
        return xsearch.XSearchConfig(self.batch_size, self.temperature, self.k_stall,
                                     self.top_k, seed=seed)

    @classmethod
    def from_dict(cls, d: dict) -> "EvolveConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        d = dict(d)
        if isinstance(d.get("seed_program"), str):
            d["seed_program"] = SourceProgram(d["seed_program"], "seed")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seed_program"] = self.seed_program.text if self.seed_program else None
        return d


def process_rng(seed: int, process_id: int, reset_count: int) -> np.random.Generator:
    return np.random.default_rng([seed, process_id, reset_count])


@dataclass
class SearchProcess:
    process_id: int
    db: ProgramDatabase
    rng: np.random.Generator
    best_score: Optional[float] = None
    reset_count: int = 0
    llm_calls_made: int = 0
    trajectory: list = field(default_factory=list)  # (global call index, best_score)

    def note(self, score: Optional[float]):
        if score is not None and (self.best_score is None or score > self.best_score):
            self.best_score = score


@dataclass
class StepReport:
    process_id: int
    call_index: int
    entry_id: int
    score: Optional[float]
    evaluations: int
    error: Optional[str] = None


def score_source(source: SourceProgram, evaluator, cfg: EvolveConfig, seed: int):
    """Parse ``source`` and search its space; returns (canonical_text, score, evals)."""
    tp = parse(source.text)
    out = xsearch.run(tp, evaluator, cfg.xsearch_config(seed))
    if out.failed:
        return tp.render(), None, out.evaluations_used
    return canonical_source(out.compacted.text), out.best_score, out.evaluations_used


def step(p: SearchProcess, evaluator, cfg: EvolveConfig, backend: Backend,
         template: PromptTemplate, call_index: Callable[[], int] = lambda: 0) -> StepReport:
    """One model call for process ``p``.

    Unusable responses and failed requests become invalid entries.
    BudgetExhausted and other gateway errors propagate.
    """
    refs: list[ProgramEntry] = []
    if p.db.sampleable_count:
        refs = sample_refs(p.db, cfg.sampler(), p.rng, seed=cfg.seed)
        refs.sort(key=lambda e: e.score, reverse=cfg.refs_order == "descending")
    prompt = build_prompt(refs, template)
    req = ChatRequest(prompt, temperature=cfg.temperature, max_tokens=cfg.max_tokens,
                      process_id=p.process_id)
    if cfg.model:
        req.model = cfg.model
    try:
        response = backend.complete(req)
    except (TransportError, MalformedResponse) as exc:
        response, failure = "", exc  # the call still consumed its budget unit
    else:
        failure = None
    p.llm_calls_made += 1
    idx = call_index()
    search_seed = int(p.rng.integers(2**63))
    parents = [r.id for r in refs]
    error = None
    try:
        if failure is not None:
            raise failure
        text, score, evals = score_source(extract_program(response), evaluator, cfg, search_seed)
    except (NoProgramFound, ParseError, TransportError, MalformedResponse) as exc:
        text, score, evals, error = response, None, 0, f"{type(exc).__name__}: {exc}"
    entry = p.db.add(text, score, parent_ids=parents, created_round=idx,
                     process_id=p.process_id)
    p.note(score)
    p.trajectory.append((idx, p.best_score))
    return StepReport(p.process_id, idx, entry.id, score, evals, error)


@dataclass
class HalvingEvent:
    call_index: int
    restarted: list
    scores: list  # best_score of every process just before the reset

    def to_dict(self):
        return asdict(self)


@dataclass
class RunReport:
    config: dict
    problem: str
    calls: int
    halving_events: list
    processes: list
    global_best: Optional[dict]
    global_trajectory: list

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    raise TypeError(f"cannot serialize {type(x).__name__}")


class _Runner:
    def __init__(self, cfg, problem, backend, db_dir, progress):
        self.cfg = cfg
        self.problem = problem
        self.backend = backend
        self.db_dir = db_dir
        self.progress = progress
        self.calls = 0
        self.global_best: Optional[dict] = None
        self.global_trajectory: list = []
        self._seed_entry = None
        if cfg.seed_program is not None:
            text, score, _ = score_source(cfg.seed_program, problem.evaluator, cfg, cfg.seed)
            self._seed_entry = (text, score)

    def emit(self, event: dict):
        if self.progress is not None:
            self.progress(json.dumps(event, sort_keys=True))

    def new_process(self, pid: int, reset_count: int) -> SearchProcess:
        path = None
        if self.db_dir is not None:
            path = os.path.join(self.db_dir, f"process{pid}_reset{reset_count}.jsonl")
            open(path, "w").close()
        p = SearchProcess(pid, ProgramDatabase(path), process_rng(self.cfg.seed, pid, reset_count),
                          reset_count=reset_count)
        if self._seed_entry is not None:
            text, score = self._seed_entry
            p.db.add(text, score, created_round=self.calls, process_id=pid)
            p.note(score)
            self.offer(p, p.db.entries[-1])
        return p

    def offer(self, p: SearchProcess, entry: ProgramEntry):
        if not entry.valid:
            return
        if self.global_best is None or entry.score > self.global_best["score"]:
            self.global_best = {"score": entry.score, "source": entry.source,
                                "process_id": p.process_id, "reset_count": p.reset_count,
                                "call_index": self.calls, "entry_id": entry.id}

    def halve(self, processes, rng) -> HalvingEvent:
        k = len(processes) // 2
        scores = [p.best_score for p in processes]
        ties = rng.random(len(processes))
        ranked = sorted(range(len(processes)),
                        key=lambda i: (-math.inf if scores[i] is None else scores[i], ties[i]))
        restarted = sorted(ranked[:k])
        for i in restarted:
            processes[i] = self.new_process(i, processes[i].reset_count + 1)
        return HalvingEvent(self.calls, restarted, scores)


def run_evolution(cfg: EvolveConfig, problem, backend: Backend, template: PromptTemplate,
                  db_dir: Optional[str] = None,
                  progress: Optional[Callable[[str], None]] = None) -> RunReport:
    """Run until the call budget is spent.

    ``problem`` needs ``name`` and ``evaluator`` attributes.  With ``db_dir``
    each process generation writes its own JSON-lines database there.
    ``progress`` receives one JSON line per event.
    """
    if backend.budget is None:
        backend.budget = BudgetCounter(cfg.budget)
    if db_dir is not None:
        os.makedirs(db_dir, exist_ok=True)
    run = _Runner(cfg, problem, backend, db_dir, progress)
    processes = [run.new_process(pid, 0) for pid in range(cfg.k_search)]
    history = {pid: [] for pid in range(cfg.k_search)}
    halvings: list[HalvingEvent] = []
    halving_rng = np.random.default_rng([cfg.seed, 2**31 - 1])

    def call_index():
        run.calls += 1
        return run.calls

    turn = 0
    while True:
        p = processes[turn % cfg.k_search]
        turn += 1
        try:
            rep = step(p, problem.evaluator, cfg, backend, template, call_index)
        except BudgetExhausted:
            break
        run.offer(p, p.db.entries[-1])
        run.global_trajectory.append(
            (run.calls, run.global_best["score"] if run.global_best else None))
        history[p.process_id].append(
            {"call": run.calls, "reset": p.reset_count, "score": rep.score,
             "best": p.best_score})
        run.emit({"event": "call", "call": run.calls, "process": p.process_id,
                  "reset": p.reset_count, "score": rep.score, "evaluations": rep.evaluations,
                  "error": rep.error})
        if cfg.k_reset and run.calls % cfg.k_reset == 0 and cfg.k_search // 2 > 0:
            ev = run.halve(processes, halving_rng)
            halvings.append(ev)
            run.emit({"event": "halving", **ev.to_dict()})

    procs = [{"process_id": p.process_id, "reset_count": p.reset_count,
              "llm_calls": sum(1 for h in history[p.process_id]),
              "best_score": p.best_score, "history": history[p.process_id]}
             for p in processes]
    return RunReport(cfg.to_dict(), problem.name, run.calls, [h.to_dict() for h in halvings],
                     procs, run.global_best, run.global_trajectory)
