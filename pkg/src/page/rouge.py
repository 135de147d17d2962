"""ROUGE-1, ROUGE-2 and ROUGE-L scoring for rewritten requirements.

N-gram overlap uses clipped counts (each reference n-gram credits at
most its reference multiplicity); ROUGE-L uses the longest common
subsequence. All three report precision against the candidate length,
recall against the reference length, and their F1. Empty sides score
zero rather than raising.
"""

from __future__ import annotations

import dataclasses
from collections import Counter
from typing import Iterable, Sequence

from . import kernels
from .textfeat import tokenize


@dataclasses.dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, matches: int, candidate_total: int,
                    reference_total: int) -> "RougeScore":
        p = matches / candidate_total if candidate_total > 0 else 0.0
        r = matches / reference_total if reference_total > 0 else 0.0
        f = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(precision=p, recall=r, f1=f)


@dataclasses.dataclass(frozen=True)
class RougeReport:
    """Scores for one candidate/reference pair."""

    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore


@dataclasses.dataclass(frozen=True)
class CorpusRougeReport:
    """Arithmetic means of the per-pair scores, cell by cell."""

    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore
    count: int


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate_tokens: Sequence[str], reference_tokens: Sequence[str],
            n: int) -> RougeScore:
    """Clipped n-gram overlap score."""
    if n < 1:
        raise ValueError("n must be at least 1")
    cand = _ngrams(candidate_tokens, n)
    ref = _ngrams(reference_tokens, n)
    matches = sum(min(c, ref[g]) for g, c in cand.items())
    return RougeScore.from_counts(matches, sum(cand.values()),
                                  sum(ref.values()))


def rouge_l(candidate_tokens: Sequence[str],
            reference_tokens: Sequence[str]) -> RougeScore:
    """Longest-common-subsequence score over whole token sequences."""
    ids: dict[str, int] = {}
    for tok in candidate_tokens:
        ids.setdefault(tok, len(ids))
    for tok in reference_tokens:
        ids.setdefault(tok, len(ids))
    a = [ids[t] for t in candidate_tokens]
    b = [ids[t] for t in reference_tokens]
    matches = kernels.lcs_length(a, b)
    return RougeScore.from_counts(matches, len(candidate_tokens),
                                  len(reference_tokens))


def score_pair(candidate: str, reference: str) -> RougeReport:
    """Tokenize both texts (same rules as featurization) and score."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    return RougeReport(
        rouge1=rouge_n(cand, ref, 1),
        rouge2=rouge_n(cand, ref, 2),
        rougeL=rouge_l(cand, ref),
    )


def corpus_average(reports: Iterable[RougeReport]) -> CorpusRougeReport:
    """Mean of every metric cell over the given pair reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("cannot average zero reports")
    n = len(reports)

    def mean(metric: str, field: str) -> float:
        return sum(getattr(getattr(rep, metric), field) for rep in reports) / n

    def agg(metric: str) -> RougeScore:
        return RougeScore(precision=mean(metric, "precision"),
                          recall=mean(metric, "recall"),
                          f1=mean(metric, "f1"))

    return CorpusRougeReport(rouge1=agg("rouge1"), rouge2=agg("rouge2"),
                             rougeL=agg("rougeL"), count=n)
