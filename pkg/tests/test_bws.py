import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from humorank.bws import bws_scores, write_bws_scores
from humorank.pairgen import PreferencePair

from oracles import bws_counting

pair_lists = st.lists(
    st.tuples(st.sampled_from("abcdefgh"), st.sampled_from("abcdefgh")).filter(lambda t: t[0] != t[1]),
    max_size=40,
).map(lambda ps: [PreferencePair(*p) for p in ps])


def test_examples():
    assert bws_scores([PreferencePair("x", "b"), PreferencePair("y", "b")]).scores["b"] == 1.0
    assert bws_scores([PreferencePair("x", "q"), PreferencePair("q", "y")]).scores["q"] == 0.0
    s = bws_scores([PreferencePair("a", "b"), PreferencePair("a", "c"), PreferencePair("b", "c")]).scores
    assert s == {"a": -1.0, "b": 0.0, "c": 1.0}


def test_zero_appearance_convention():
    res = bws_scores([PreferencePair("a", "b")], ids=["a", "b", "z"])
    assert res.scores["z"] == 0.0 and res.appearances["z"] == 0
    assert bws_scores([]).scores == {}


@given(pair_lists)
def test_matches_counting_oracle(pairs):
    assert bws_scores(pairs).scores == bws_counting(pairs)


@given(pair_lists)
def test_antisymmetry(pairs):
    fwd = bws_scores(pairs).scores
    rev = bws_scores([PreferencePair(b, w) for w, b in pairs]).scores
    assert rev == {k: -v for k, v in fwd.items()}


@given(pair_lists, st.randoms())
def test_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    assert bws_scores(shuffled) == bws_scores(pairs)


@given(pair_lists)
def test_scores_bounded(pairs):
    res = bws_scores(pairs)
    assert all(-1.0 <= v <= 1.0 for v in res.scores.values())


@pytest.mark.parametrize("n", range(2, 9))
def test_round_robin_dominance(n):
    # complete round robin consistent with a total order: dominance implies higher score
    rng = random.Random(n)
    order = [f"i{k}" for k in range(n)]
    rng.shuffle(order)
    pairs = [PreferencePair(order[i], order[j]) for i, j in itertools.combinations(range(n), 2)]
    s = bws_scores(pairs).scores
    for i, j in itertools.combinations(range(n), 2):
        assert s[order[j]] >= s[order[i]]


def test_csv_output(tmp_path):
    write_bws_scores(bws_scores([PreferencePair("a", "b")]), tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == "id,score,appearances\na,-1.0,1\nb,1.0,1\n"
