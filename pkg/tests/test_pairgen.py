from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from humorank.corpus import Dataset, Instance
from humorank.pairgen import (
    PairGenConfig,
    PreferencePair,
    generate_minimal_pairs,
    minimal_pair_count,
    read_pairs,
    score_levels,
    subsample_pairs,
    subsample_stages,
    write_pairs,
)

from oracles import exhaustive_order, transitive_closure


def dataset(scores: dict[str, float]) -> Dataset:
    return Dataset(tuple(Instance(i, "", gold_label=s > 0, gold_score=s) for i, s in scores.items()))


def test_levels_abc_example():
    levels = score_levels(dataset({"A": 5.0, "B": 3.0, "C": 1.0}))
    assert levels == [(1.0, ["C"]), (3.0, ["B"]), (5.0, ["A"])]


def test_levels_grouping_keeps_order():
    assert score_levels(dataset({"X": 0.0, "Y": 0.0, "Z": 2.0})) == [(0.0, ["X", "Y"]), (2.0, ["Z"])]
    assert score_levels(dataset({"a": 2.0, "b": 2.0, "c": 2.0})) == [(2.0, ["a", "b", "c"])]


def test_levels_missing_score():
    ds = Dataset((Instance("a", "", gold_label=True, gold_score=1.0), Instance("q", "")))
    with pytest.raises(ValueError, match="'q'"):
        score_levels(ds)


def test_minimal_pairs_abc_example():
    pairs = generate_minimal_pairs(score_levels(dataset({"A": 5.0, "B": 3.0, "C": 1.0})))
    assert pairs == [("C", "B"), ("B", "A")]
    assert ("C", "A") not in pairs


def test_single_level_has_no_pairs():
    assert generate_minimal_pairs([(1.0, ["a", "b"])]) == []


def test_two_by_two_closure_matches_brute_force():
    scores = {"a": 1.0, "b": 1.0, "c": 2.0, "d": 2.0}
    pairs = generate_minimal_pairs(score_levels(dataset(scores)))
    assert len(pairs) == 4
    assert transitive_closure(pairs) == exhaustive_order(scores)


def test_unsorted_levels_rejected():
    with pytest.raises(ValueError):
        generate_minimal_pairs([(2.0, ["a"]), (1.0, ["b"])])


score_maps = st.dictionaries(
    st.text("abcdefghij", min_size=1, max_size=3),
    st.sampled_from([0.0, 1.0, 1.5, 2.0, 3.25, 4.0, 5.0]),
    min_size=1,
    max_size=30,
)


@given(score_maps)
def test_completeness_and_count_identity(scores):
    levels = score_levels(dataset(scores))
    pairs = generate_minimal_pairs(levels)
    assert len(pairs) == minimal_pair_count(levels)
    assert transitive_closure(pairs) == exhaustive_order(scores)
    assert all(scores[w] < scores[b] for w, b in pairs)


@settings(max_examples=40)
@given(score_maps)
def test_minimality(scores):
    pairs = generate_minimal_pairs(score_levels(dataset(scores)))
    full = transitive_closure(pairs)
    for k in range(len(pairs)):
        assert transitive_closure(pairs[:k] + pairs[k + 1:]) != full


def test_cap_contract():
    pairs = [PreferencePair(w, "b") for w in "xyz"] + [PreferencePair("q", "r")]
    out = subsample_pairs(pairs, PairGenConfig(cap_per_better=1, seed=3))
    assert sum(p.better_id == "b" for p in out) == 1
    assert PreferencePair("q", "r") in out


def test_identity_when_nothing_to_drop():
    pairs = generate_minimal_pairs(score_levels(dataset({"a": 0.0, "b": 1.0, "c": 1.0, "d": 2.0})))
    out = subsample_pairs(pairs, PairGenConfig(cap_per_better=10, keep_fraction=1.0))
    assert Counter(out) == Counter(pairs)


def test_keep_fraction_sixty_percent():
    pairs = [PreferencePair(f"w{i}", f"b{i}") for i in range(10)]
    assert len(subsample_pairs(pairs, PairGenConfig(cap_per_better=5, keep_fraction=0.6, seed=1))) == 6


def test_keep_fraction_minimum_one():
    pairs = [PreferencePair("a", "b")]
    assert subsample_pairs(pairs, PairGenConfig(keep_fraction=0.01)) == pairs
    assert subsample_pairs([], PairGenConfig(keep_fraction=0.5)) == []


def test_stages_report_capped_set():
    pairs = [PreferencePair(f"w{i}", "b") for i in range(8)]
    capped, final = subsample_stages(pairs, PairGenConfig(cap_per_better=4, keep_fraction=0.5, seed=9))
    assert len(capped) == 4 and len(final) == 2
    assert set(final) <= set(capped)


pair_lists = st.lists(
    st.tuples(st.sampled_from("abcdefg"), st.sampled_from("abcdefg")).filter(lambda t: t[0] != t[1]),
    max_size=60,
).map(lambda ps: [PreferencePair(*p) for p in ps])


@given(pair_lists, st.integers(1, 6), st.floats(0.05, 1.0), st.integers(0, 2**64 - 1))
def test_subsample_properties(pairs, cap, frac, seed):
    cfg = PairGenConfig(cap, frac, seed)
    out = subsample_pairs(pairs, cfg)
    assert out == subsample_pairs(pairs, cfg)
    counts = Counter(p.better_id for p in out)
    assert max(counts.values(), default=0) <= cap
    assert not Counter(out) - Counter(pairs)


def test_uniform_cap_selection():
    # each of 4 candidate pairs should survive a cap of 1 about a quarter of the time
    pairs = [PreferencePair(w, "b") for w in "wxyz"]
    hits = Counter(subsample_pairs(pairs, PairGenConfig(cap_per_better=1, seed=s))[0].worse_id for s in range(4000))
    freq = np.array([hits[w] for w in "wxyz"]) / 4000
    assert np.all(np.abs(freq - 0.25) < 0.03)


def test_config_validation():
    with pytest.raises(ValueError):
        PairGenConfig(cap_per_better=0)
    with pytest.raises(ValueError):
        PairGenConfig(keep_fraction=0.0)
    with pytest.raises(ValueError):
        PairGenConfig(seed=2**64)


def test_pairs_file_round_trip(tmp_path):
    pairs = [PreferencePair("C", "B"), PreferencePair("B", "A")]
    p = tmp_path / "pairs.tsv"
    write_pairs(pairs, p, {"k": 1})
    assert p.read_text() == "worse_id\tbetter_id\nC\tB\nB\tA\n"
    assert read_pairs(p) == pairs
    assert (tmp_path / "pairs.tsv.meta.json").exists()


def test_read_pairs_rejects_bad_header(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("a\tb\nC\tB\n")
    with pytest.raises(ValueError):
        read_pairs(p)
