"""Random-forest classifier for EARS categories, built from scratch.

Trees are grown by greedy Gini minimization (see page.kernels for the
split semantics); the forest combines them by majority vote with ties
resolved toward the lower category id. Training is deterministic given
a seed: per-tree randomness is derived through numpy SeedSequence
spawning, so tree t of a forest depends only on (seed, t). Grid search
exploits that by growing one maximal forest per (depth, split,
features) group and scoring every smaller n_estimators as a prefix of
it.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .dataset import CANONICAL_ORDER, EarsCategory, RequirementRecord, make_folds
from .textfeat import FeatureVector, Vocabulary, fit_vocabulary, to_matrix, tokenize, vectorize

N_CLASSES = len(CANONICAL_ORDER)

MODEL_SCHEMA = "page-forest/1"


@dataclasses.dataclass(frozen=True)
class HyperParams:
    """Forest training knobs. max_depth=None means unlimited."""

    n_estimators: int = 100
    max_depth: int | None = 10
    min_samples_split: int = 5
    max_features: int | str = "sqrt"

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be at least 2")
        if isinstance(self.max_features, str):
            if self.max_features != "sqrt":
                raise ValueError("max_features must be 'sqrt' or an int")
        elif self.max_features < 1:
            raise ValueError("max_features must be positive")

    def resolve_max_features(self, n_features: int) -> int:
        if n_features < 1:
            raise ValueError("need at least one feature")
        if self.max_features == "sqrt":
            m = int(math.isqrt(n_features))
        else:
            m = int(self.max_features)
        return max(1, min(m, n_features))

    def to_jsonable(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "max_features": self.max_features,
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "HyperParams":
        return cls(
            n_estimators=int(d["n_estimators"]),
            max_depth=None if d["max_depth"] is None else int(d["max_depth"]),
            min_samples_split=int(d["min_samples_split"]),
            max_features=d["max_features"] if d["max_features"] == "sqrt"
            else int(d["max_features"]),
        )


@dataclasses.dataclass(frozen=True)
class DecisionTree:
    """One trained tree as flat node arrays; -1 marks leaves."""

    feature: np.ndarray  # int32, split feature or -1
    threshold: np.ndarray  # float64, go left when value <= threshold
    left: np.ndarray  # int32 child ids
    right: np.ndarray
    counts: np.ndarray  # int64 (n_nodes, n_classes) training histogram

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id for every row of X."""
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            feat = self.feature[node]
            rows = np.flatnonzero(feat >= 0)
            if rows.size == 0:
                return node
            cur = node[rows]
            go_left = X[rows, feat[rows]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority class id at the reached leaf, per row."""
        return self.counts[self.apply(X)].argmax(axis=1)

    def to_jsonable(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "DecisionTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            counts=np.asarray(d["counts"], dtype=np.int64),
        )


@dataclasses.dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[DecisionTree, ...]
    params: HyperParams
    seed: int
    vocabulary: Vocabulary | None = None

    @property
    def n_features(self) -> int | None:
        return len(self.vocabulary) if self.vocabulary is not None else None


def _tree_seeds(stream: np.random.SeedSequence):
    """Per-tree derivation: one child for the bootstrap draw, one for
    the in-tree feature subsets."""
    boot_seq, feat_seq = stream.spawn(2)
    kernel_seed = int(feat_seq.generate_state(1, np.uint64)[0])
    return boot_seq, kernel_seed


def _grow(X, y, sample_idx, params: HyperParams, kernel_seed: int) -> DecisionTree:
    mf = params.resolve_max_features(X.shape[1])
    arrays = kernels.grow_tree(
        X, y, sample_idx,
        n_classes=N_CLASSES,
        max_depth=params.max_depth,
        min_samples_split=params.min_samples_split,
        max_features=mf,
        seed=kernel_seed,
    )
    return DecisionTree(*arrays)


def train_tree(X: np.ndarray, y: Sequence[int], params: HyperParams,
               rng_stream: np.random.SeedSequence) -> DecisionTree:
    """Grow a single tree on all rows of X (no bootstrap)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int32)
    _, kernel_seed = _tree_seeds(rng_stream)
    return _grow(X, y, np.arange(len(X)), params, kernel_seed)


def train_forest(X: np.ndarray, y: Sequence[int], params: HyperParams,
                 seed: int, vocabulary: Vocabulary | None = None,
                 bootstrap: bool = True) -> RandomForestModel:
    """Train a forest of params.n_estimators trees.

    Each tree sees a bootstrap resample (with replacement, same size)
    unless bootstrap is False. Deterministic for a given seed.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int32)
    if len(X) != len(y):
        raise ValueError("X and y disagree on sample count")
    if len(X) == 0:
        raise ValueError("cannot train on an empty dataset")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise ValueError("labels must be valid category ids")
    root = np.random.SeedSequence(seed)
    trees = []
    for child in root.spawn(params.n_estimators):
        boot_seq, kernel_seed = _tree_seeds(child)
        if bootstrap:
            gen = np.random.Generator(np.random.PCG64(boot_seq))
            sample_idx = gen.integers(0, len(X), len(X))
        else:
            sample_idx = np.arange(len(X))
        trees.append(_grow(X, y, sample_idx, params, kernel_seed))
    return RandomForestModel(trees=tuple(trees), params=params, seed=seed,
                             vocabulary=vocabulary)


def _votes(trees: Iterable[DecisionTree], X: np.ndarray) -> np.ndarray:
    out = np.zeros((len(X), N_CLASSES), dtype=np.int64)
    rows = np.arange(len(X))
    for tree in trees:
        out[rows, tree.predict(X)] += 1
    return out


def predict_batch(model: RandomForestModel, X: np.ndarray) -> list[EarsCategory]:
    """Majority vote over trees; ties go to the lower category id."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    preds = _votes(model.trees, X).argmax(axis=1)
    return [CANONICAL_ORDER[int(p)] for p in preds]


def predict(model: RandomForestModel, vector: FeatureVector | np.ndarray) -> EarsCategory:
    """Classify one feature vector."""
    if isinstance(vector, FeatureVector):
        if model.vocabulary is None:
            raise ValueError("model carries no vocabulary; pass a dense row")
        row = np.zeros(len(model.vocabulary), dtype=np.float64)
        for i, w in zip(vector.indices, vector.weights):
            row[i] = w
    else:
        row = np.asarray(vector, dtype=np.float64)
        if row.ndim != 1:
            raise ValueError("expected a single feature row")
    return predict_batch(model, row.reshape(1, -1))[0]


def predict_text(model: RandomForestModel, text: str) -> EarsCategory:
    """Tokenize, vectorize with the model's vocabulary, classify."""
    if model.vocabulary is None:
        raise ValueError("model carries no vocabulary")
    return predict(model, vectorize(model.vocabulary, tokenize(text)))


DEFAULT_GRID: tuple[HyperParams, ...] = tuple(
    HyperParams(n_estimators=n, max_depth=d, min_samples_split=s)
    for n in (50, 100, 200)
    for d in (5, 10, None)
    for s in (2, 5, 10)
)


def grid_search(records: Sequence[RequirementRecord],
                grid: Sequence[HyperParams] = DEFAULT_GRID,
                k: int = 5, seed: int = 0) -> tuple[HyperParams, list[float]]:
    """k-fold cross-validated accuracy for every combo in the grid.

    Returns (best combo, mean accuracy per combo in grid order); ties
    go to the earlier grid entry. The text vocabulary is refit on the
    training side of each fold. Combos sharing tree-shape knobs are
    trained once per fold at the largest n_estimators and the smaller
    forests are read off as prefixes, which is exact because tree t
    depends only on (seed, t).
    """
    if not grid:
        raise ValueError("grid must not be empty")
    if not records:
        raise ValueError("no records to cross-validate on")
    by_id = {r.id: r for r in records}
    labels = {r.id: r.label for r in records}
    plan = make_folds(labels.keys(), labels, k=k, seed=seed)

    groups: dict[tuple, list[tuple[int, int]]] = {}
    for gi, hp in enumerate(grid):
        key = (hp.max_depth, hp.min_samples_split, hp.max_features)
        groups.setdefault(key, []).append((gi, hp.n_estimators))

    sums = [0.0] * len(grid)
    for fold_i, fold in enumerate(plan.folds):
        eval_ids = sorted(fold)
        train_ids = sorted(labels.keys() - fold)
        train_docs = [tokenize(by_id[i].natural) for i in train_ids]
        vocab = fit_vocabulary(train_docs)
        X_tr = to_matrix(vocab, [vectorize(vocab, d) for d in train_docs])
        y_tr = np.array([int(labels[i]) for i in train_ids], dtype=np.int32)
        X_ev = to_matrix(vocab, [vectorize(vocab, tokenize(by_id[i].natural))
                                 for i in eval_ids])
        y_ev = np.array([int(labels[i]) for i in eval_ids], dtype=np.int64)

        for group_i, (key, members) in enumerate(groups.items()):
            depth, min_split, max_feats = key
            hp_max = HyperParams(n_estimators=max(n for _, n in members),
                                 max_depth=depth, min_samples_split=min_split,
                                 max_features=max_feats)
            checkpoints = {n for _, n in members}
            ss = np.random.SeedSequence(entropy=seed,
                                        spawn_key=(fold_i, group_i))
            votes = np.zeros((len(eval_ids), N_CLASSES), dtype=np.int64)
            rows = np.arange(len(eval_ids))
            acc_at: dict[int, float] = {}
            for t, child in enumerate(ss.spawn(hp_max.n_estimators), start=1):
                boot_seq, kernel_seed = _tree_seeds(child)
                gen = np.random.Generator(np.random.PCG64(boot_seq))
                sample_idx = gen.integers(0, len(X_tr), len(X_tr))
                tree = _grow(X_tr, y_tr, sample_idx, hp_max, kernel_seed)
                votes[rows, tree.predict(X_ev)] += 1
                if t in checkpoints:
                    pred = votes.argmax(axis=1)
                    acc_at[t] = float((pred == y_ev).mean())
            for gi, n_est in members:
                sums[gi] += acc_at[n_est]

    scores = [s / plan.k for s in sums]
    best = grid[max(range(len(grid)), key=lambda i: (scores[i], -i))]
    return best, scores


@dataclasses.dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


def _f1(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


@dataclasses.dataclass(frozen=True)
class ClassificationReport:
    """Per-class precision/recall/F1 plus macro and weighted averages."""

    per_class: dict[EarsCategory, ClassMetrics]
    accuracy: float
    macro_avg: ClassMetrics
    weighted_avg: ClassMetrics

    @property
    def n_samples(self) -> int:
        return self.macro_avg.support

    @classmethod
    def from_per_class(cls, per_class: dict[EarsCategory, ClassMetrics],
                       accuracy: float) -> "ClassificationReport":
        """Aggregate existing per-class rows into the two averages."""
        if not per_class:
            raise ValueError("need at least one class row")
        rows = [per_class[c] for c in sorted(per_class)]
        total = sum(m.support for m in rows)
        macro = ClassMetrics(
            precision=sum(m.precision for m in rows) / len(rows),
            recall=sum(m.recall for m in rows) / len(rows),
            f1=sum(m.f1 for m in rows) / len(rows),
            support=total,
        )
        if total == 0:
            raise ValueError("total support is zero")
        weighted = ClassMetrics(
            precision=sum(m.precision * m.support for m in rows) / total,
            recall=sum(m.recall * m.support for m in rows) / total,
            f1=sum(m.f1 * m.support for m in rows) / total,
            support=total,
        )
        return cls(per_class=dict(per_class), accuracy=accuracy,
                   macro_avg=macro, weighted_avg=weighted)

    def to_jsonable(self) -> dict:
        def row(m: ClassMetrics) -> dict:
            return {"precision": m.precision, "recall": m.recall,
                    "f1": m.f1, "support": m.support}

        return {
            "per_class": {c.display_name: row(self.per_class[c])
                          for c in sorted(self.per_class)},
            "accuracy": self.accuracy,
            "macro_avg": row(self.macro_avg),
            "weighted_avg": row(self.weighted_avg),
        }

    def to_text(self) -> str:
        width = max(len(c.display_name) for c in self.per_class)
        width = max(width, len("weighted avg"))
        lines = [f"{'':<{width}}  precision  recall  f1-score  support"]
        for cat in sorted(self.per_class):
            m = self.per_class[cat]
            lines.append(
                f"{cat.display_name:<{width}}  {m.precision:>9.2f}  "
                f"{m.recall:>6.2f}  {m.f1:>8.2f}  {m.support:>7d}")
        lines.append("")
        lines.append(f"{'accuracy':<{width}}  {'':>9}  {'':>6}  "
                     f"{self.accuracy:>8.2f}  {self.n_samples:>7d}")
        for name, m in (("macro avg", self.macro_avg),
                        ("weighted avg", self.weighted_avg)):
            lines.append(
                f"{name:<{width}}  {m.precision:>9.2f}  {m.recall:>6.2f}  "
                f"{m.f1:>8.2f}  {m.support:>7d}")
        return "\n".join(lines)


def classification_report(y_true: Sequence[EarsCategory],
                          y_pred: Sequence[EarsCategory]) -> ClassificationReport:
    """Compute the report over the classes present in either sequence."""
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred disagree on length")
    if not y_true:
        raise ValueError("cannot report on empty inputs")
    t = [EarsCategory(v) for v in y_true]
    p = [EarsCategory(v) for v in y_pred]
    cats = sorted(set(t) | set(p))
    per_class = {}
    for cat in cats:
        tp = sum(1 for a, b in zip(t, p) if a == cat and b == cat)
        pred_n = sum(1 for b in p if b == cat)
        true_n = sum(1 for a in t if a == cat)
        prec = tp / pred_n if pred_n else 0.0
        rec = tp / true_n if true_n else 0.0
        per_class[cat] = ClassMetrics(precision=prec, recall=rec,
                                      f1=_f1(prec, rec), support=true_n)
    accuracy = sum(1 for a, b in zip(t, p) if a == b) / len(t)
    return ClassificationReport.from_per_class(per_class, accuracy=accuracy)


@dataclasses.dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true categories, columns predictions, canonical order."""

    matrix: np.ndarray  # int64 (n_classes, n_classes)

    def to_jsonable(self) -> dict:
        return {
            "labels": [c.display_name for c in CANONICAL_ORDER],
            "matrix": self.matrix.tolist(),
        }

    def to_text(self) -> str:
        names = [c.display_name for c in CANONICAL_ORDER]
        width = max(len(n) for n in names) + 2
        head = " " * width + "".join(f"{n[:12]:>14}" for n in names)
        lines = [head]
        for i, name in enumerate(names):
            cells = "".join(f"{int(v):>14d}" for v in self.matrix[i])
            lines.append(f"{name:<{width}}" + cells)
        return "\n".join(lines)


def confusion_matrix(y_true: Sequence[EarsCategory],
                     y_pred: Sequence[EarsCategory]) -> ConfusionMatrix:
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred disagree on length")
    m = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for a, b in zip(y_true, y_pred):
        m[int(EarsCategory(a)), int(EarsCategory(b))] += 1
    return ConfusionMatrix(matrix=m)


def save_model(model: RandomForestModel, path) -> None:
    """Write the forest as deterministic JSON (schema page-forest/1)."""
    payload = {
        "schema": MODEL_SCHEMA,
        "params": model.params.to_jsonable(),
        "seed": model.seed,
        "vocabulary": None if model.vocabulary is None
        else model.vocabulary.to_json(),
        "trees": [t.to_jsonable() for t in model.trees],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> RandomForestModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    schema = payload.get("schema")
    if schema != MODEL_SCHEMA:
        raise ValueError(f"unsupported model schema: {schema!r}")
    vocab = payload.get("vocabulary")
    return RandomForestModel(
        trees=tuple(DecisionTree.from_jsonable(t) for t in payload["trees"]),
        params=HyperParams.from_jsonable(payload["params"]),
        seed=int(payload["seed"]),
        vocabulary=None if vocab is None else Vocabulary.from_json(vocab),
    )
