import itertools
import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spacevo import xsearch
from spacevo.priolang import EvalError, parse
from spacevo.problems import ToyEvaluator
from spacevo.xsearch import (
    MIN_SCORE,
    ExhaustedError,
    ScoreTable,
    StallState,
    XSearchConfig,
    apply_scores,
    sample_batch,
    site_probabilities,
    softmax,
)

from .conftest import TOY_SUM


def test_single_vector_space():
    table = ScoreTable([1])
    batch = sample_batch(table, {}, XSearchConfig(), np.random.default_rng(0), 1)
    assert batch == [(0,)]
    with pytest.raises(ExhaustedError):
        sample_batch(table, {(0,): 1.0}, XSearchConfig(), np.random.default_rng(0), 1)


def test_fresh_table_is_uniform():
    for p in ScoreTable([3, 4]).probabilities():
        assert np.allclose(p, 1 / len(p))


def test_unscored_option_borrows_site_max():
    p = site_probabilities(np.array([5.0, MIN_SCORE, 1.0]))
    assert p[0] == pytest.approx(p[1])
    assert p[1] > p[2]


def test_confident_option_monte_carlo():
    p = site_probabilities(np.array([100.0, -100.0]))
    # standardized scores are (+1, -1); softmax gives e^2/(1+e^2)
    assert p[0] == pytest.approx(np.exp(2) / (1 + np.exp(2)))
    z = 5.0
    q = softmax(np.array([z, -z]))
    assert q[0] > 0.99
    draws = np.random.default_rng(1).choice(2, size=100_000, p=q)
    assert abs((draws == 0).mean() - q[0]) < 0.005


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=8, unique=True))
def test_softmax_sums_to_one_and_increasing(scores):
    s = np.array(scores)
    p = site_probabilities(s)
    assert abs(p.sum() - 1.0) <= 1e-12
    order = np.argsort(s)
    assert np.all(np.diff(p[order]) >= 0)


def test_apply_scores_updates():
    table = ScoreTable([3, 3])
    visited = {}
    state = StallState(3)
    apply_scores([((0, 1), 10.0)], table, visited, state)
    assert table.scores[0][0] == 10 and table.scores[1][1] == 10
    assert table.scores[0][1] == MIN_SCORE
    apply_scores([((0, 2), 5.0), ((0, 0), 9.0)], table, visited, state)
    assert table.scores[0][0] == 10


def test_max_score_retained():
    table = ScoreTable([2])
    apply_scores([((0,), 5.0), ((0,), 9.0)], table, {}, StallState(3))
    assert table.scores[0][0] == 9


def test_invalid_results_visit_only():
    table = ScoreTable([2])
    visited = {}
    apply_scores([((1,), None)], table, visited, StallState(3))
    assert visited == {(1,): None}
    assert table.scores[0][1] == MIN_SCORE


def test_stall_terminates_on_fourth():
    state = StallState(3)
    table = ScoreTable([100])
    assert not apply_scores([((0,), 1.0)], table, {}, state)
    signals = [apply_scores([((i,), 0.5)], table, {}, state) for i in range(1, 5)]
    assert signals == [False, False, False, True]


def test_zero_site_program():
    tp = parse("def f():\n    return 4\n")
    out = xsearch.run(tp, ToyEvaluator())
    assert out.evaluations_used == 1
    assert out.best_score == 4 and out.best_program.text == tp.source.text


def test_toy_compacts_to_threes():
    out = xsearch.run(parse(TOY_SUM), ToyEvaluator(), XSearchConfig(seed=3))
    assert out.best_score == 9
    assert "tunable" not in out.compacted.text
    assert out.compacted.text.count("3") == 3


def test_top_k_keeps_options_and_ties_go_earlier():
    tp = parse("def f():\n    return tunable([1, 2, 3]) * 0 + 1\n")
    out = xsearch.run(tp, ToyEvaluator(), XSearchConfig(top_k=1, seed=0))
    first = out.evaluated[0][0]
    option = tp.sites[0].options[first[0]]
    assert out.compacted.text.strip().endswith(f"return {option} * 0 + 1")
    out2 = xsearch.run(tp, ToyEvaluator(), XSearchConfig(top_k=2, seed=0))
    assert out2.compacted.text.count("tunable") == 1


def test_all_invalid_fails():
    tp = parse("def f():\n    return tunable([1, 2]) / 0\n")
    out = xsearch.run(tp, ToyEvaluator())
    assert out.failed and out.compacted is None


def test_evaluator_exceptions_count_as_invalid():
    def boom(cp):
        raise EvalError("nope")
    assert xsearch.run(parse(TOY_SUM), boom).failed


def test_batch_sizes_both_converge():
    tp = parse(TOY_SUM)
    small = xsearch.run(tp, ToyEvaluator(), XSearchConfig(batch_size=8, seed=5))
    large = xsearch.run(tp, ToyEvaluator(), XSearchConfig(batch_size=64, seed=5))
    assert small.best_score == large.best_score == 9
    per_round = lambda o: o.evaluations_used / o.rounds
    assert per_round(large) >= per_round(small)


def test_reproducible_and_monotone():
    tp = parse("def f():\n    return tunable([1, 5, 2, 4]) * tunable([3, 1, 2]) - tunable([0, 2])\n")
    a = xsearch.run(tp, ToyEvaluator(), XSearchConfig(batch_size=3, seed=9))
    b = xsearch.run(tp, ToyEvaluator(), XSearchConfig(batch_size=3, seed=9))
    assert a.evaluated == b.evaluated
    bests = [h["best"] for h in a.history]
    assert bests == sorted(bests)


def test_executor_path_matches_serial():
    from concurrent.futures import ThreadPoolExecutor
    tp = parse(TOY_SUM)
    serial = xsearch.run(tp, ToyEvaluator(), XSearchConfig(batch_size=4, seed=2))
    with ThreadPoolExecutor(4) as pool:
        par = xsearch.run(tp, ToyEvaluator(), XSearchConfig(batch_size=4, seed=2), executor=pool)
    assert par.evaluated == serial.evaluated


def test_progress_records_logged(caplog):
    with caplog.at_level(logging.INFO, logger="spacevo.xsearch"):
        xsearch.run(parse(TOY_SUM), ToyEvaluator(), XSearchConfig(batch_size=4))
    assert any('"round": 1' in r.getMessage() for r in caplog.records)


@pytest.mark.parametrize("kw", [{"batch_size": 0}, {"k_stall": 0}, {"top_k": 0},
                                {"temperature": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        XSearchConfig(**kw)
