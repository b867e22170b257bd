"""Drive the full evolution loop offline with canned model responses.

Four processes share a budget of 24 calls; every 8 calls the weakest half restarts.
"""
import tempfile

from spacevo.llm_gateway import ScriptedBackend
from spacevo.orchestrator import EvolveConfig, PromptTemplate, run_evolution
from spacevo.problems import make_problem

RESPONSES = [
    "```python\ndef priority():\n    return tunable([1, 2]) + tunable([0, 1])\n```",
    "Sorry, no code this time.",
    "```python\ndef priority():\n    return tunable([1, 2, 3]) * tunable([1, 2, 3])\n```",
    "```python\ndef priority():\n    return 1 / 0\n```",
]

with tempfile.TemporaryDirectory() as db:
    cfg = EvolveConfig(k_search=4, k_reset=8, budget=24, batch_size=4, seed=1)
    report = run_evolution(cfg, make_problem("toy"), ScriptedBackend(RESPONSES * 6),
                           PromptTemplate.load("toy"), db_dir=db)
print("calls:", report.calls)
for h in report.halving_events:
    print(f"halving at call {h['call_index']}: restarted {h['restarted']}")
print("best:", report.global_best["score"])
print(report.global_best["source"])
