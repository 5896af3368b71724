import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from humorank.metrics import (
    UndefinedCorrelationError,
    classification_report,
    format_table,
    report_from_confusion,
    report_json,
    rmse,
    spearman,
)

from oracles import rank_correlation


def test_perfect_predictor():
    r = classification_report([True, False, True], [True, False, True])
    assert (r.precision, r.recall, r.f1, r.accuracy) == (1.0, 1.0, 1.0, 1.0)


def test_known_confusion_f1():
    # 753 of 1000 positives found, 528 false alarms: p = 0.5878, r = 0.753
    r = report_from_confusion(tp=753, fp=528, tn=1000, fn=247)
    assert r.precision == pytest.approx(0.588, abs=5e-4)
    assert r.recall == pytest.approx(0.753, abs=5e-4)
    assert r.f1 == pytest.approx(0.660, abs=5e-4)


def test_degenerate_conventions():
    r = classification_report([True, True], [False, False])
    assert r.precision == 0.0 and r.recall == 0.0 and r.f1 == 0.0
    r = classification_report([False, False], [False, False])
    assert r.precision == 0.0 and r.accuracy == 1.0


def test_length_mismatch():
    with pytest.raises(ValueError):
        classification_report([True], [True, False])
    with pytest.raises(ValueError):
        rmse([1.0], [1.0, 2.0])


bools = st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=50)


@given(bools)
def test_report_identities(pairs):
    pred, gold = zip(*pairs)
    r = classification_report(pred, gold)
    for v in (r.precision, r.recall, r.f1, r.accuracy):
        assert 0.0 <= v <= 1.0
    if r.precision + r.recall > 0:
        assert r.f1 == 2 * r.precision * r.recall / (r.precision + r.recall)
    else:
        assert r.f1 == 0.0
    assert r.accuracy == (r.tp + r.tn) / len(pred)


def test_rmse_examples():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([3.0, 3.0], [1.0, 5.0]) == 2.0
    # uniform gold over {1..5}: population variance is 2
    assert rmse([3.0] * 5, [1, 2, 3, 4, 5]) == pytest.approx(math.sqrt(2.0))


floats = st.floats(-100, 100, allow_nan=False)


@given(st.lists(st.tuples(floats, floats), min_size=1, max_size=30), st.randoms())
def test_rmse_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a = rmse(*zip(*pairs))
    b = rmse(*zip(*shuffled))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_spearman_examples():
    assert spearman([1, 2, 3], [1, 2, 3]) == 1.0
    assert spearman([1, 2, 3], [3, 2, 1]) == -1.0
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)
    with pytest.raises(UndefinedCorrelationError):
        spearman([1, 1, 1], [1, 2, 3])


vectors = st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=3, max_size=30).filter(
    lambda ps: len({a for a, _ in ps}) > 1 and len({b for _, b in ps}) > 1
)


@given(vectors)
def test_spearman_matches_reference(pairs):
    a, b = map(np.array, zip(*pairs))
    assert spearman(a, b) == pytest.approx(rank_correlation(a, b), abs=1e-12)


@given(vectors)
def test_spearman_monotone_invariance(pairs):
    a, b = map(np.array, zip(*pairs))
    assert spearman(np.exp(a / 10), b ** 3) == pytest.approx(spearman(a, b), abs=1e-12)


def test_outputs():
    r = report_from_confusion(753, 528, 1000, 247)
    text = format_table("our system", r, 1.81)
    assert "F1" in text and "RMSE" in text and "0.660" in text and "1.810" in text
    assert '"f1"' in report_json(r, rmse=1.81)
