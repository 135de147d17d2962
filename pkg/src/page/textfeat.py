"""Tokenization and TF-IDF feature vectors for requirement text.

One tokenizer serves the whole system (classifier features and ROUGE
alike). No stemming and no stop-word removal: the cue words that
separate EARS categories (when, while, if, where, always, shall) are
exactly the words a stop-list would throw away.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

# A token is a maximal run of Unicode letters or digits ([^\W_] is \w
# minus the underscore).
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase tokens in order of appearance, duplicates kept."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    """Token index fitted on training documents only.

    Indices are dense 0..V-1 in lexicographic token order, so the
    vocabulary is a pure function of the training token multiset.
    """

    token_index: dict[str, int]
    doc_freq: tuple[int, ...]
    n_docs: int

    def __len__(self) -> int:
        return len(self.token_index)

    def idf(self, token: str) -> float:
        i = self.token_index[token]
        return math.log((1 + self.n_docs) / (1 + self.doc_freq[i])) + 1.0

    def idf_array(self) -> np.ndarray:
        df = np.asarray(self.doc_freq, dtype=np.float64)
        return np.log((1.0 + self.n_docs) / (1.0 + df)) + 1.0

    def to_json(self) -> dict:
        tokens = sorted(self.token_index, key=self.token_index.get)
        return {"tokens": tokens, "doc_freq": list(self.doc_freq), "n_docs": self.n_docs}

    @classmethod
    def from_json(cls, data: dict) -> "Vocabulary":
        index = {tok: i for i, tok in enumerate(data["tokens"])}
        return cls(index, tuple(data["doc_freq"]), int(data["n_docs"]))


@dataclass(frozen=True)
class FeatureVector:
    """Sparse L2-normalized TF-IDF vector: strictly increasing indices."""

    indices: tuple[int, ...]
    weights: tuple[float, ...]

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights))


def fit_vocabulary(train_docs: list[list[str]]) -> Vocabulary:
    """Build the vocabulary and document frequencies from token lists."""
    if not train_docs:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    df: dict[str, int] = {}
    for doc in train_docs:
        for token in set(doc):
            df[token] = df.get(token, 0) + 1
    tokens = sorted(df)
    index = {tok: i for i, tok in enumerate(tokens)}
    return Vocabulary(index, tuple(df[tok] for tok in tokens), len(train_docs))


def vectorize(vocab: Vocabulary, tokens: list[str]) -> FeatureVector:
    """TF-IDF weights (raw counts * idf), L2-normalized.

    Out-of-vocabulary tokens are ignored; an all-OOV document yields
    the zero vector.
    """
    counts: dict[int, int] = {}
    for token in tokens:
        i = vocab.token_index.get(token)
        if i is not None:
            counts[i] = counts.get(i, 0) + 1
    if not counts:
        return FeatureVector((), ())
    indices = sorted(counts)
    idf = vocab.idf_array()
    raw = [counts[i] * float(idf[i]) for i in indices]
    norm = math.sqrt(sum(w * w for w in raw))
    return FeatureVector(tuple(indices), tuple(w / norm for w in raw))


def to_matrix(vocab: Vocabulary, vectors: list[FeatureVector]) -> np.ndarray:
    """Scatter sparse vectors into a dense (n, V) float64 matrix."""
    X = np.zeros((len(vectors), len(vocab)), dtype=np.float64)
    for row, vec in enumerate(vectors):
        for i, w in zip(vec.indices, vec.weights):
            X[row, i] = w
    return X


def vectorize_texts(vocab: Vocabulary, texts: list[str]) -> np.ndarray:
    """tokenize + vectorize + to_matrix in one step."""
    return to_matrix(vocab, [vectorize(vocab, tokenize(t)) for t in texts])
