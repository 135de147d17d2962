from collections import Counter
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from page.rouge import (CorpusRougeReport, RougeReport, RougeScore,
                        corpus_average, rouge_l, rouge_n, score_pair)

tokens = st.lists(st.sampled_from([f"w{i}" for i in range(10)]), max_size=8)


def _brute_ngram_matches(cand, ref, n):
    c = Counter(tuple(cand[i:i + n]) for i in range(len(cand) - n + 1))
    r = Counter(tuple(ref[i:i + n]) for i in range(len(ref) - n + 1))
    return sum(min(c[g], r[g]) for g in c)


def _brute_lcs(a, b):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def test_unigram_example():
    got = rouge_n(["the", "cat", "sat"], ["the", "cat", "slept"], 1)
    assert got == RougeScore(2 / 3, 2 / 3, 2 / 3)


def test_bigram_example():
    got = rouge_n(["the", "cat", "sat"], ["the", "cat", "slept"], 2)
    assert got == RougeScore(1 / 2, 1 / 2, 1 / 2)


def test_lcs_example():
    got = rouge_l(["a", "b", "c", "d"], ["b", "a", "c", "d"])
    assert got.precision == pytest.approx(3 / 4)
    assert got.recall == pytest.approx(3 / 4)
    assert got.f1 == pytest.approx(3 / 4)


def test_disjoint_scores_zero():
    assert rouge_n(["x"], ["y"], 1) == RougeScore(0.0, 0.0, 0.0)
    assert rouge_l(["x", "x"], ["y"]) == RougeScore(0.0, 0.0, 0.0)


def test_empty_sides_score_zero():
    assert rouge_n([], ["a"], 1) == RougeScore(0.0, 0.0, 0.0)
    assert rouge_n(["a"], [], 1) == RougeScore(0.0, 0.0, 0.0)
    assert rouge_n([], [], 2) == RougeScore(0.0, 0.0, 0.0)
    assert rouge_l([], []) == RougeScore(0.0, 0.0, 0.0)


def test_identity_scores_one():
    toks = ["when", "the", "alarm", "fires"]
    for score in (rouge_n(toks, toks, 1), rouge_n(toks, toks, 2),
                  rouge_l(toks, toks)):
        assert score == RougeScore(1.0, 1.0, 1.0)


def test_clipping_counts_each_reference_gram_once():
    # candidate repeats "a" three times but reference has it once
    got = rouge_n(["a", "a", "a"], ["a", "b"], 1)
    assert got.precision == pytest.approx(1 / 3)
    assert got.recall == pytest.approx(1 / 2)


def test_rouge_n_rejects_bad_n():
    with pytest.raises(ValueError):
        rouge_n(["a"], ["a"], 0)


def test_ngram_shorter_than_n():
    assert rouge_n(["a"], ["a", "b"], 2) == RougeScore(0.0, 0.0, 0.0)


def test_score_pair_uses_shared_tokenizer():
    rep = score_pair("The cat sat!", "the CAT sat")
    assert rep.rouge1 == RougeScore(1.0, 1.0, 1.0)
    assert rep.rougeL == RougeScore(1.0, 1.0, 1.0)


@settings(max_examples=120, deadline=None)
@given(tokens, tokens)
def test_rouge_matches_brute_force(cand, ref):
    for n in (1, 2):
        got = rouge_n(cand, ref, n)
        m = _brute_ngram_matches(cand, ref, n)
        expect = RougeScore.from_counts(m, max(len(cand) - n + 1, 0),
                                        max(len(ref) - n + 1, 0))
        assert got == expect
    got_l = rouge_l(cand, ref)
    expect_l = RougeScore.from_counts(_brute_lcs(tuple(cand), tuple(ref)),
                                      len(cand), len(ref))
    assert got_l == expect_l


@settings(max_examples=120, deadline=None)
@given(tokens, tokens)
def test_swap_symmetry_and_bounds(cand, ref):
    for fn in (lambda a, b: rouge_n(a, b, 1), lambda a, b: rouge_n(a, b, 2),
               rouge_l):
        ab = fn(cand, ref)
        ba = fn(ref, cand)
        assert ab.precision == pytest.approx(ba.recall)
        assert ab.recall == pytest.approx(ba.precision)
        assert ab.f1 == pytest.approx(ba.f1)
        for v in (ab.precision, ab.recall, ab.f1):
            assert 0.0 <= v <= 1.0
        if ab.precision + ab.recall > 0:
            assert ab.f1 == pytest.approx(
                2 * ab.precision * ab.recall / (ab.precision + ab.recall))
        else:
            assert ab.f1 == 0.0


@settings(max_examples=120, deadline=None)
@given(tokens, tokens)
def test_lcs_recall_never_exceeds_unigram_recall(cand, ref):
    # a common subsequence is a sub-multiset of the unigram overlap
    assert rouge_l(cand, ref).recall <= rouge_n(cand, ref, 1).recall + 1e-12


def _rep(v):
    s = RougeScore(v, v, v)
    return RougeReport(rouge1=s, rouge2=s, rougeL=s)


def test_corpus_average_single_is_identity():
    rep = _rep(0.7)
    avg = corpus_average([rep])
    assert avg.rouge1 == rep.rouge1
    assert avg.rougeL == rep.rougeL
    assert avg.count == 1


def test_corpus_average_mean():
    avg = corpus_average([_rep(0.4), _rep(0.6)])
    assert avg.rouge1.f1 == pytest.approx(0.5)
    assert avg.rouge2.precision == pytest.approx(0.5)
    assert avg.count == 2


def test_corpus_average_order_insensitive():
    reps = [_rep(0.1), _rep(0.5), _rep(0.9)]
    a = corpus_average(reps)
    b = corpus_average(reversed(reps))
    assert a == b


def test_corpus_average_empty_rejected():
    with pytest.raises(ValueError):
        corpus_average([])
