import json

import numpy as np
import pytest

from spacevo.llm_gateway import BudgetCounter, ScriptedBackend, ScriptExhausted, TransportError
from spacevo.orchestrator import (
    OUTPUT_RESTRICTION,
    EvolveConfig,
    PromptTemplate,
    SearchProcess,
    build_prompt,
    process_rng,
    run_evolution,
    step,
)
from spacevo.priolang import SourceProgram
from spacevo.problems import SHANNON_HINT, make_problem
from spacevo.progdb import ProgramDatabase, ProgramEntry

from .conftest import TOY_SUM


def const(v):
    return f"```python\ndef priority():\n    return {v}\n```"


def template(hint=None):
    return PromptTemplate.load("toy", hint)


def entry(i, score, src="def priority(el, n):\n    return 0\n"):
    return ProgramEntry(i, src, score)


class TestPrompt:
    def test_two_refs(self):
        text = build_prompt([entry(0, 1.0), entry(1, 2.0)], PromptTemplate.load("capset"))
        assert "def priority_v0(el, n)" in text and "def priority_v1(el, n)" in text
        assert text.index("priority_v0") < text.index("priority_v1")
        assert "priority_v2" in text
        assert text.rstrip().endswith(OUTPUT_RESTRICTION)

    def test_section_order(self):
        t = PromptTemplate.load("capset")
        text = build_prompt([entry(0, 1.0)], t)
        marks = [t.problem_description, t.evolution_instruction, t.tunable_marker_instruction,
                 t.task_description, "priority_v0", OUTPUT_RESTRICTION]
        positions = [text.index(m) for m in marks]
        assert positions == sorted(positions)

    def test_hint(self):
        t = PromptTemplate.load("cyclegraph", SHANNON_HINT)
        text = build_prompt([], t)
        assert ("The score is computed based on the relationships among el[i], el[-i], "
                "el[(i - k) % n], and el[(i + k) % n].") in text

    def test_no_refs(self):
        text = build_prompt([], PromptTemplate.load("capset"))
        assert "priority_v0" not in text and "Reference" not in text

    def test_evolution_wording(self):
        t = PromptTemplate.load("capset")
        assert "develop an improved implementation based on the provided references" \
            in t.evolution_instruction
        assert "might lead to breakthroughs" in t.evolution_instruction

    def test_output_restriction_fixed(self):
        with pytest.raises(ValueError):
            PromptTemplate("a", "b", "c", "d", output_restriction="anything")

    def test_template_override(self, tmp_path):
        (tmp_path / "toy.json").write_text(json.dumps(
            {"problem_description": "CUSTOM", "task_description": "T"}))
        t = PromptTemplate.load("toy", directory=tmp_path)
        assert t.problem_description == "CUSTOM"
        assert "tunable" in t.tunable_marker_instruction

    def test_all_bundled_templates_load(self):
        for name in ("capset", "admissible", "cyclegraph", "binpacking-or",
                     "binpacking-weibull", "toy"):
            assert build_prompt([], PromptTemplate.load(name))


def proc(pid=0):
    return SearchProcess(pid, ProgramDatabase(), process_rng(0, pid, 0))


class TestStep:
    cfg = EvolveConfig(batch_size=8)

    def test_singleton_program(self):
        p = proc()
        rep = step(p, make_problem("toy").evaluator, self.cfg, ScriptedBackend([const(4)]),
                   template())
        assert rep.score == 4 and len(p.db) == 1 and p.db.entries[0].score == 4
        assert p.best_score == 4 and p.llm_calls_made == 1

    def test_prose_is_invalid(self):
        p = proc()
        counter = BudgetCounter(5)
        step(p, make_problem("toy").evaluator, self.cfg,
             ScriptedBackend(["no code today"], counter), template())
        assert len(p.db) == 1 and p.db.sampleable_count == 0
        assert counter.used == 1

    def test_tunable_program_reaches_optimum(self):
        p = proc()
        rep = step(p, make_problem("toy").evaluator, self.cfg,
                   ScriptedBackend([f"```python\n{TOY_SUM}```"]), template())
        assert rep.score == 9
        assert p.db.entries[0].source == "def priority():\n    return 3 + 3 + 3\n"

    def test_refs_are_ascending(self):
        p = proc()
        p.db.add("def priority():\n    return 1\n", 1.0)
        p.db.add("def priority():\n    return 2\n", 2.0)
        prompts = []

        class Spy(ScriptedBackend):
            def _complete(self, req):
                prompts.append(req.prompt)
                return super()._complete(req)
        cfg = EvolveConfig(k_ref=2, batch_size=8)
        for _ in range(10):
            step(p, make_problem("toy").evaluator, cfg, Spy([const(0)]), template())
        for text in prompts:
            bodies = [text.index(f"def priority_v{i}") for i in range(2)]
            v0 = text[bodies[0]:bodies[1]]
            v1 = text[bodies[1]:]
            r0 = float(v0.split("return")[1].split()[0])
            r1 = float(v1.split("return")[1].split()[0])
            assert r0 <= r1

    def test_transport_failure_is_invalid_entry(self):
        class Failing(ScriptedBackend):
            def _complete(self, req):
                raise TransportError("down")
        p = proc()
        counter = BudgetCounter(3)
        rep = step(p, make_problem("toy").evaluator, self.cfg, Failing([], counter), template())
        assert rep.score is None and "TransportError" in rep.error
        assert counter.used == 1 and p.db.sampleable_count == 0


class TestRun:
    def test_single_process_never_halves(self):
        cfg = EvolveConfig(k_search=1, k_reset=2, budget=6, batch_size=8)
        rep = run_evolution(cfg, make_problem("toy"), ScriptedBackend([const(1)] * 6), template())
        assert rep.halving_events == [] and rep.calls == 6

    def test_plateau_process_is_restarted(self):
        script = [{"process_id": 0, "content": const(1)}] * 4 + \
                 [{"process_id": 1, "content": const(v)} for v in (2, 3, 4, 5)]
        cfg = EvolveConfig(k_search=2, k_reset=2, budget=2, batch_size=8)
        rep = run_evolution(cfg, make_problem("toy"), ScriptedBackend(script), template())
        assert rep.halving_events[0]["restarted"] == [0]
        assert rep.processes[0]["reset_count"] == 1 and rep.processes[1]["reset_count"] == 0

    def test_budget_accounting(self):
        counter = BudgetCounter(7)
        b = ScriptedBackend([const(i) for i in range(20)], counter)
        cfg = EvolveConfig(k_search=3, k_reset=None, budget=7, batch_size=8)
        rep = run_evolution(cfg, make_problem("toy"), b, template())
        assert rep.calls == counter.used == 7
        assert sum(p["llm_calls"] for p in rep.processes) == 7

    def test_seed_program_and_reset(self, tmp_path):
        seed = SourceProgram("def priority():\n    return tunable([1, 2])\n", "seed")
        cfg = EvolveConfig(k_search=2, k_reset=2, budget=2, batch_size=8, seed_program=seed)
        rep = run_evolution(cfg, make_problem("toy"), ScriptedBackend([const(0)] * 2),
                            template(), db_dir=str(tmp_path))
        restarted = rep.halving_events[0]["restarted"][0]
        fresh = ProgramDatabase.load(tmp_path / f"process{restarted}_reset1.jsonl")
        assert [e.source for e in fresh] == ["def priority():\n    return 2\n"]
        assert rep.global_best["score"] == 2
        first = ProgramDatabase.load(tmp_path / "process0_reset0.jsonl")
        assert first.entries[0].score == 2

    def test_global_best_survives_resets(self):
        script = [const(v) for v in (9, 0, 0, 0, 0, 0, 0, 0)]
        cfg = EvolveConfig(k_search=2, k_reset=1, budget=8, batch_size=8)
        rep = run_evolution(cfg, make_problem("toy"), ScriptedBackend(script), template())
        assert rep.global_best["score"] == 9
        assert all(b == 9 for _, b in rep.global_trajectory)
        assert len(rep.halving_events) == 8

    def test_backend_errors_propagate(self):
        cfg = EvolveConfig(k_search=1, budget=3, batch_size=8)
        with pytest.raises(ScriptExhausted):
            run_evolution(cfg, make_problem("toy"), ScriptedBackend([const(1)]), template())

    def test_progress_stream(self):
        lines = []
        cfg = EvolveConfig(k_search=2, k_reset=2, budget=2, batch_size=8)
        run_evolution(cfg, make_problem("toy"), ScriptedBackend([const(3)] * 2), template(),
                      progress=lines.append)
        events = [json.loads(l) for l in lines]
        assert [e["event"] for e in events] == ["call", "call", "halving"]
        assert events[0]["call"] == 1 and events[0]["score"] == 3

    def test_fresh_rng_streams_differ(self):
        a = process_rng(0, 1, 0).integers(1 << 30, size=4)
        b = process_rng(0, 1, 1).integers(1 << 30, size=4)
        assert not np.array_equal(a, b)


@pytest.mark.parametrize("kw", [{"k_search": 0}, {"k_reset": 0}, {"budget": -1},
                                {"refs_order": "random"}, {"k_cluster": 1}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        EvolveConfig(**kw)


def test_config_dict_roundtrip():
    cfg = EvolveConfig(seed_program=SourceProgram("def f():\n    return 1\n", "seed"))
    again = EvolveConfig.from_dict(cfg.to_dict())
    assert again.seed_program.text == cfg.seed_program.text
    with pytest.raises(ValueError):
        EvolveConfig.from_dict({"bogus": 1})
