"""Run the tunable search on a three-site toy program and show the compacted result."""
from spacevo import xsearch
from spacevo.priolang import parse, solution_space_size
from spacevo.problems import ToyEvaluator

TEXT = """def priority():
    return tunable([1, 2, 3]) + tunable([1, 2, 3]) + tunable([1, 2, 3])
"""

tp = parse(TEXT)
print("solution space:", solution_space_size(tp))
out = xsearch.run(tp, ToyEvaluator(), xsearch.XSearchConfig(batch_size=8, seed=0))
print(f"best {out.best_score} after {out.evaluations_used} evaluations, {out.rounds} rounds")
print(out.compacted.text)
