import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecompress.metrics import (
    EmptyReferenceError,
    LengthMismatchError,
    ZeroCompressionError,
    ZeroOriginalError,
    accuracy_histogram,
    compression_rate,
    edit_distance,
    evaluate_masks,
    f1,
    format_report_table,
    histogram_csv,
    ssa,
    tradeoff_t,
)

token_lists = st.lists(st.sampled_from(["a", "b", "c"]), max_size=8)


def brute_force_distance(a, b, memo=None):
    """Recursive-definition oracle: minimum over edit scripts."""
    if memo is None:
        memo = {}
    key = (a, b)
    if key in memo:
        return memo[key]
    if not a:
        d = len(b)
    elif not b:
        d = len(a)
    else:
        d = min(
            brute_force_distance(a[1:], b, memo) + 1,
            brute_force_distance(a, b[1:], memo) + 1,
            brute_force_distance(a[1:], b[1:], memo) + (a[0] != b[0]),
        )
    memo[key] = d
    return d


def test_edit_distance_identity():
    assert edit_distance(["x", "y"], ["x", "y"]) == 0
    assert edit_distance([], []) == 0


def test_edit_distance_single_deletion():
    assert edit_distance(["a", "b", "c"], ["a", "c"]) == 1


def test_edit_distance_against_oracle_small():
    seqs = [
        tuple(s)
        for L in range(5)
        for s in itertools.product("abc", repeat=L)
    ]
    memo = {}
    for a in seqs:
        for b in seqs:
            assert edit_distance(a, b) == brute_force_distance(a, b, memo)


@given(token_lists, token_lists, token_lists)
@settings(max_examples=200, deadline=None)
def test_edit_distance_is_a_metric(a, b, c):
    dab = edit_distance(a, b)
    assert dab >= 0
    assert (dab == 0) == (a == b)
    assert dab == edit_distance(b, a)
    assert dab <= edit_distance(a, c) + edit_distance(c, b)


def test_ssa_equal():
    assert ssa(["x"], ["x"]) == 1.0


def test_ssa_one_error_of_three():
    assert ssa(["a", "c"], ["a", "b", "c"]) == pytest.approx(2 / 3, abs=1e-4)


def test_ssa_clamps_at_zero():
    assert ssa(["x"] * 20, ["y"]) == 0.0


def test_ssa_empty_reference():
    with pytest.raises(EmptyReferenceError):
        ssa(["x"], [])


@given(token_lists, st.lists(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=8))
@settings(max_examples=200, deadline=None)
def test_ssa_range_and_equality(hyp, ref):
    v = ssa(hyp, ref)
    assert 0.0 <= v <= 1.0
    assert (v == 1.0) == (list(hyp) == list(ref))


def test_compression_rate():
    assert compression_rate(5, 7) == pytest.approx(0.7143, abs=1e-4)
    assert compression_rate(7, 7) == 1.0
    assert compression_rate(0, 7) == 0.0
    with pytest.raises(ZeroOriginalError):
        compression_rate(1, 0)


def test_f1_cases():
    assert f1([1, 1, 0], [1, 1, 0]) == 1.0
    # pred keeps positions {0,1}, gold keeps {0,1,2}: P=1, R=2/3
    assert f1([1, 1, 0], [1, 1, 1]) == pytest.approx(0.8)
    assert f1([1, 0], [0, 1]) == 0.0
    assert f1([0, 0], [0, 0]) == 1.0
    with pytest.raises(LengthMismatchError):
        f1([1], [1, 0])


def test_f1_symmetric_and_monotone():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = list(rng.integers(0, 2, size=6))
        b = list(rng.integers(0, 2, size=6))
        assert f1(a, b) == pytest.approx(f1(b, a))
    # growing overlap with a fixed gold never hurts F1
    gold = [1, 1, 1, 0, 0]
    nested = [[1, 0, 0, 0, 0], [1, 1, 0, 0, 0], [1, 1, 1, 0, 0]]
    scores = [f1(p, gold) for p in nested]
    assert scores == sorted(scores)


def test_tradeoff_t_reference_rows():
    assert tradeoff_t(0.7457, 0.7211) == pytest.approx(0.7711, abs=1e-4)
    assert tradeoff_t(0.7952, 0.7739) == pytest.approx(0.8171, abs=1e-4)
    assert tradeoff_t(0.8465, 0.8391) == pytest.approx(0.8540, abs=1e-4)
    # 0.7491**2 / 0.7008 exactly; the reference table prints 0.8006 for
    # this row, which is only reachable from unrounded operands.
    assert tradeoff_t(0.7491, 0.7008) == pytest.approx(0.8007, abs=1e-4)
    assert tradeoff_t(1.0, 1.0) == 1.0
    with pytest.raises(ZeroCompressionError):
        tradeoff_t(0.5, 0.0)


def test_accuracy_histogram():
    assert accuracy_histogram([1.0, 0.95]) == [0, 0, 0, 0, 0, 0, 2]
    assert accuracy_histogram([0.30]) == [1, 0, 0, 0, 0, 0, 0]
    with pytest.warns(UserWarning):
        assert accuracy_histogram([0.1])[0] == 1


def test_accuracy_histogram_uniform():
    # round() so each value is the same double as the corresponding bin edge
    values = [round(0.30 + k * 0.01, 2) for k in range(70)]
    assert accuracy_histogram(values) == [10] * 7


def test_accuracy_histogram_conserves_counts():
    rng = np.random.default_rng(1)
    values = list(rng.uniform(0.3, 1.0, size=137))
    assert sum(accuracy_histogram(values)) == 137


def test_evaluate_masks_perfect():
    sentences = [["a", "b", "c"], ["d", "e"]]
    golds = [[1, 0, 1], [1, 1]]
    report = evaluate_masks(sentences, golds, golds)
    assert report.accuracy == 1.0
    assert report.f1 == 1.0
    assert report.compression_rate == report.gold_compression_rate
    assert report.t == pytest.approx(1.0 / report.compression_rate)


def test_evaluate_masks_all_keep():
    sentences = [["a", "b", "c", "d"]]
    gold = [[1, 1, 0, 0]]
    pred = [[1, 1, 1, 1]]
    report = evaluate_masks(sentences, pred, gold)
    assert report.compression_rate == 1.0
    assert report.accuracy == pytest.approx(ssa(sentences[0], ["a", "b"]))


def test_report_table_and_histogram_formats():
    report = evaluate_masks([["a", "b"]], [[1, 0]], [[1, 0]])
    row = {
        "corpus": "dev",
        "hidden_size": 8,
        "accuracy": report.accuracy,
        "compression_rate": report.compression_rate,
        "gold_compression_rate": report.gold_compression_rate,
        "f1": report.f1,
        "t": report.t,
    }
    table = format_report_table([row])
    assert "Accuracy %" in table and "dev" in table
    csv = histogram_csv(report.histogram())
    assert csv.startswith("bin,count,percent")
    assert len(csv.strip().splitlines()) == 8
