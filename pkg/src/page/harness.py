"""Experiment harness: the three rewrite experiments plus reporting.

The three arms differ only in which auxiliary module feeds the
composer: none (zero-shot), the gold label (dataset-samples) or the
trained classifier (page). Every arm composes a prompt per record,
generates a rewrite, cleans it and scores it against the gold EARS
text; failed generations are excluded from the corpus averages and
counted instead. Also provides the deterministic synthetic corpus the
desk-scale checks run on, and a one-call training pipeline (split,
grid search, final fit, held-out report).
"""

from __future__ import annotations

import dataclasses
import enum
import json
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Mapping, Sequence

import numpy as np

from .auxiliary import (ClassifierAuxiliary, ExampleBank, NullAuxiliary,
                        OracleAuxiliary, default_bank)
from .composer import PromptTemplate, compose, default_template, zero_shot_template
from .dataset import (CANONICAL_ORDER, DatasetSplit, EarsCategory,
                      RequirementRecord, stratified_split)
from .forest import (ClassificationReport, ConfusionMatrix, DEFAULT_GRID,
                     HyperParams, RandomForestModel, classification_report,
                     confusion_matrix, grid_search, predict_batch, train_forest)
from .generator import GeneratorError, TextGenerator
from .rouge import CorpusRougeReport, RougeReport, RougeScore, corpus_average, score_pair
from .textfeat import fit_vocabulary, to_matrix, tokenize, vectorize

RUN_SCHEMA = "page-run/1"


class ExperimentKind(enum.Enum):
    ZERO_SHOT = "zero-shot"
    DATASET_SAMPLES = "dataset-samples"
    PAGE = "page"


@dataclasses.dataclass(frozen=True)
class RecordResult:
    """One evaluated record; error is set when generation failed."""

    record_id: int
    prompt: str
    generation: str | None
    scores: RougeReport | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclasses.dataclass(frozen=True)
class ExperimentRun:
    kind: ExperimentKind
    rows: tuple[RecordResult, ...]
    corpus: CorpusRougeReport | None  # None when every row failed
    seed: int
    model_name: str
    template_name: str

    @property
    def failed_count(self) -> int:
        return sum(1 for r in self.rows if r.failed)


def _model_name(generator: TextGenerator) -> str:
    config = getattr(generator, "config", None)
    name = getattr(config, "model", None)
    if name:
        return str(name)
    return type(generator).__name__


def run_experiment(kind: ExperimentKind,
                   records: Sequence[RequirementRecord],
                   generator: TextGenerator,
                   classifier: RandomForestModel | None = None,
                   bank: ExampleBank | None = None,
                   template: PromptTemplate | None = None,
                   seed: int = 0,
                   concurrency: int = 1) -> ExperimentRun:
    """Run one experiment arm over the records, ordered by record id."""
    kind = ExperimentKind(kind)
    if not records:
        raise ValueError("no records to evaluate")
    if concurrency < 1:
        raise ValueError("concurrency must be at least 1")
    bank = bank if bank is not None else default_bank()
    if template is None:
        template = (zero_shot_template() if kind is ExperimentKind.ZERO_SHOT
                    else default_template())
    if kind is ExperimentKind.ZERO_SHOT:
        auxiliary = NullAuxiliary()
    elif kind is ExperimentKind.DATASET_SAMPLES:
        auxiliary = OracleAuxiliary(bank=bank)
    else:
        if classifier is None:
            raise ValueError("page experiment needs a trained classifier")
        auxiliary = ClassifierAuxiliary(model=classifier, bank=bank)

    ordered = sorted(records, key=lambda r: r.id)

    def evaluate(record: RequirementRecord) -> RecordResult:
        contribution = auxiliary.contribute(record.natural, record)
        contributions = [] if contribution is None else [contribution]
        prompt = compose(template, contributions, record.natural,
                         record_id=record.id)
        try:
            result = generator.generate(prompt.text)
        except GeneratorError as exc:
            return RecordResult(record_id=record.id, prompt=prompt.text,
                                generation=None, scores=None, error=str(exc))
        return RecordResult(record_id=record.id, prompt=prompt.text,
                            generation=result.cleaned,
                            scores=score_pair(result.cleaned,
                                              record.gold_ears))

    if concurrency == 1:
        rows = [evaluate(r) for r in ordered]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            rows = list(pool.map(evaluate, ordered))

    scored = [r.scores for r in rows if not r.failed]
    corpus = corpus_average(scored) if scored else None
    return ExperimentRun(kind=kind, rows=tuple(rows), corpus=corpus,
                         seed=seed, model_name=_model_name(generator),
                         template_name=template.name)


@dataclasses.dataclass(frozen=True)
class ImprovementRow:
    kind: str
    rouge1_pct: float | None
    rouge2_pct: float | None
    rougeL_pct: float | None


@dataclasses.dataclass(frozen=True)
class ImprovementTable:
    """Recall improvement over the baseline, percent per metric."""

    baseline: str
    rows: tuple[ImprovementRow, ...]


def _recalls(value) -> tuple[float, float, float]:
    """Accept a run, a corpus report, or a plain (r1, r2, rL) triple."""
    if isinstance(value, ExperimentRun):
        if value.corpus is None:
            raise ValueError(f"run {value.kind.value} has no scored rows")
        value = value.corpus
    if isinstance(value, CorpusRougeReport):
        return (value.rouge1.recall, value.rouge2.recall,
                value.rougeL.recall)
    r1, r2, rl = value
    return (float(r1), float(r2), float(rl))


def _label(value, fallback: str) -> str:
    if isinstance(value, ExperimentRun):
        return value.kind.value
    return fallback


def improvement_table(baseline, others) -> ImprovementTable:
    """pct = (recall / baseline recall - 1) * 100, None when baseline 0.

    baseline and the entries of others may be ExperimentRun objects,
    CorpusRougeReport objects or bare recall triples; others may also
    be a mapping of row label to any of those.
    """
    base = _recalls(baseline)
    if isinstance(others, Mapping):
        items = [(str(k), v) for k, v in others.items()]
    else:
        items = [(_label(v, f"run-{i}"), v) for i, v in enumerate(others)]

    def pct(value: float, base_value: float) -> float | None:
        if base_value == 0:
            return None
        return (value / base_value - 1.0) * 100.0

    rows = []
    for name, value in items:
        r = _recalls(value)
        rows.append(ImprovementRow(kind=name,
                                   rouge1_pct=pct(r[0], base[0]),
                                   rouge2_pct=pct(r[1], base[1]),
                                   rougeL_pct=pct(r[2], base[2])))
    return ImprovementTable(baseline=_label(baseline, "baseline"),
                            rows=tuple(rows))


def _score_jsonable(score: RougeScore) -> dict:
    return {"precision": score.precision, "recall": score.recall,
            "f1": score.f1}


def _report_jsonable(report: RougeReport | CorpusRougeReport) -> dict:
    out = {
        "rouge1": _score_jsonable(report.rouge1),
        "rouge2": _score_jsonable(report.rouge2),
        "rougeL": _score_jsonable(report.rougeL),
    }
    if isinstance(report, CorpusRougeReport):
        out["count"] = report.count
    return out


def _run_jsonable(run: ExperimentRun) -> dict:
    return {
        "kind": run.kind.value,
        "seed": run.seed,
        "model": run.model_name,
        "template": run.template_name,
        "failed": run.failed_count,
        "corpus": None if run.corpus is None else _report_jsonable(run.corpus),
        "rows": [
            {
                "id": r.record_id,
                "prompt": r.prompt,
                "generation": r.generation,
                "error": r.error,
                "scores": None if r.scores is None
                else _report_jsonable(r.scores),
            }
            for r in run.rows
        ],
    }


def _improvement_jsonable(table: ImprovementTable) -> dict:
    return {
        "baseline": table.baseline,
        "rows": [
            {"kind": row.kind, "rouge1_pct": row.rouge1_pct,
             "rouge2_pct": row.rouge2_pct, "rougeL_pct": row.rougeL_pct}
            for row in table.rows
        ],
    }


def _metrics_table_md(runs: Sequence[ExperimentRun]) -> str:
    head = ("| Experiment | R-1 P | R-1 R | R-1 F1 | R-2 P | R-2 R | R-2 F1 "
            "| R-L P | R-L R | R-L F1 | Failed |")
    sep = "|" + "---|" * 11
    lines = [head, sep]
    for run in runs:
        if run.corpus is None:
            cells = ["n/a"] * 9
        else:
            cells = []
            for metric in (run.corpus.rouge1, run.corpus.rouge2,
                           run.corpus.rougeL):
                cells += [f"{metric.precision:.3f}", f"{metric.recall:.3f}",
                          f"{metric.f1:.3f}"]
        lines.append("| " + " | ".join([run.kind.value] + cells
                                       + [str(run.failed_count)]) + " |")
    return "\n".join(lines)


def _improvement_table_md(table: ImprovementTable) -> str:
    lines = [
        f"Baseline: {table.baseline} (recall)",
        "",
        "| Experiment | ROUGE-1 | ROUGE-2 | ROUGE-L |",
        "|---|---|---|---|",
    ]
    for row in table.rows:
        cells = [
            "n/a" if v is None else f"{v:.2f}"
            for v in (row.rouge1_pct, row.rouge2_pct, row.rougeL_pct)
        ]
        lines.append("| " + " | ".join([row.kind] + cells) + " |")
    return "\n".join(lines)


def emit_report(runs: Sequence[ExperimentRun],
                improvement: ImprovementTable | None,
                out_dir) -> dict[str, str]:
    """Write run.json and tables.md; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    run_path = os.path.join(out_dir, "run.json")
    tables_path = os.path.join(out_dir, "tables.md")

    payload = {
        "schema": RUN_SCHEMA,
        "runs": [_run_jsonable(r) for r in runs],
        "improvement": None if improvement is None
        else _improvement_jsonable(improvement),
    }
    with open(run_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")

    parts = ["# Corpus ROUGE metrics", "", _metrics_table_md(runs)]
    if improvement is not None:
        parts += ["", "# Recall improvement over baseline (%)", "",
                  _improvement_table_md(improvement)]
    with open(tables_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")

    return {"run_json": run_path, "tables_md": tables_path}


@dataclasses.dataclass(frozen=True)
class TrainingOutcome:
    model: RandomForestModel
    split: DatasetSplit
    best_params: HyperParams
    cv_scores: tuple[float, ...]
    report: ClassificationReport
    confusion: ConfusionMatrix


def fit_classifier(records: Sequence[RequirementRecord], seed: int = 0,
                   grid: Sequence[HyperParams] = DEFAULT_GRID, k: int = 5,
                   test_fraction: float = 0.2) -> TrainingOutcome:
    """Full training pipeline: split, grid search, final fit, report.

    The winning combo is chosen by k-fold CV on the training split
    only; the final forest is trained on that whole split and reported
    against the held-out test split.
    """
    split = stratified_split(records, test_fraction=test_fraction, seed=seed)
    by_id = {r.id: r for r in records}
    train = [by_id[i] for i in sorted(split.train_ids)]
    test = [by_id[i] for i in sorted(split.test_ids)]
    if not train or not test:
        raise ValueError("both splits must be non-empty")

    best, scores = grid_search(train, grid, k=k, seed=seed)

    docs = [tokenize(r.natural) for r in train]
    vocab = fit_vocabulary(docs)
    X_tr = to_matrix(vocab, [vectorize(vocab, d) for d in docs])
    y_tr = np.array([int(r.label) for r in train], dtype=np.int32)
    model = train_forest(X_tr, y_tr, best, seed=seed, vocabulary=vocab)

    X_te = to_matrix(vocab, [vectorize(vocab, tokenize(r.natural))
                             for r in test])
    y_true = [r.label for r in test]
    y_pred = predict_batch(model, X_te)
    return TrainingOutcome(
        model=model, split=split, best_params=best,
        cv_scores=tuple(scores),
        report=classification_report(y_true, y_pred),
        confusion=confusion_matrix(y_true, y_pred),
    )


_SUBJECTS = (
    "The system", "The application", "The service", "The platform",
    "The device", "The server", "The client", "The module",
    "The dashboard", "The gateway",
)

_ACTIONS = (
    "log every transaction", "notify the administrator",
    "send a confirmation email", "lock the user account",
    "refresh the cached data", "display a status banner",
    "archive completed orders", "encrypt outgoing traffic",
    "validate the uploaded file", "synchronize user profiles",
    "generate a daily summary", "persist audit records",
    "reject duplicate submissions", "compress stored images",
    "update the search index", "track login attempts",
    "export usage statistics", "retry pending deliveries",
)

_EVENTS = (
    "the user signs in", "a payment is confirmed", "the server restarts",
    "a file upload finishes", "an order is placed", "the session expires",
    "a new device connects", "the backup completes", "an alert is triggered",
    "the configuration changes", "a message arrives",
    "the battery level drops",
)

_STATES = (
    "maintenance mode is active", "the device is offline",
    "a backup is running", "the user is idle", "the network is congested",
    "battery saver is enabled", "the queue is full",
    "an import is in progress", "the trial period is active",
    "diagnostics are running", "the cache is rebuilding", "sync is paused",
)

_CONDITIONS = (
    "unauthorized access is detected", "the password is incorrect",
    "the file exceeds the maximum size", "the payment is declined",
    "a timeout occurs", "the signature is invalid", "the disk is full",
    "the input is malformed", "the certificate has expired",
    "a conflict is found", "the quota is exceeded",
    "the request is unauthenticated",
)

_FEATURES = (
    "the device supports it", "the user has opted in",
    "a camera is available", "the region permits it",
    "the browser allows notifications", "hardware acceleration is present",
    "the account has premium status", "a stylus is detected",
    "the locale uses metric units", "an external display is attached",
    "biometric sensors exist", "offline storage is enabled",
)

_CLAUSES = {
    EarsCategory.EVENT_DRIVEN: ("when", _EVENTS),
    EarsCategory.OPTIONAL: ("where", _FEATURES),
    EarsCategory.STATE_DRIVEN: ("while", _STATES),
    EarsCategory.UNWANTED_BEHAVIOR: ("if", _CONDITIONS),
}


def _mid(subject: str) -> str:
    return subject[0].lower() + subject[1:]


def generate_synthetic_corpus(n_per_class: int = 50,
                              seed: int = 0) -> list[RequirementRecord]:
    """Template-built corpus with gold rewrites, n_per_class per category.

    Sentences combine a subject, an action and (except for the
    always-active category) a cue clause; combinations are drawn
    without replacement, so records are unique. Ids interleave the
    categories: record i belongs to category i mod 5.
    """
    import random

    if n_per_class < 1:
        raise ValueError("n_per_class must be positive")
    ubiq_space = len(_SUBJECTS) * len(_ACTIONS)
    if n_per_class > ubiq_space:
        raise ValueError(f"n_per_class is limited to {ubiq_space}")
    rng = random.Random(seed)
    texts: dict[EarsCategory, list[tuple[str, str]]] = {}

    for cat in CANONICAL_ORDER:
        rows = []
        if cat is EarsCategory.UBIQUITOUS:
            for combo in rng.sample(range(ubiq_space), n_per_class):
                subject = _SUBJECTS[combo // len(_ACTIONS)]
                action = _ACTIONS[combo % len(_ACTIONS)]
                natural = f"{subject} shall {action}."
                gold = f"{subject} shall always {action}."
                rows.append((natural, gold))
        else:
            cue, pool = _CLAUSES[cat]
            space = len(_SUBJECTS) * len(_ACTIONS) * len(pool)
            for combo in rng.sample(range(space), n_per_class):
                subject = _SUBJECTS[combo // (len(_ACTIONS) * len(pool))]
                rest = combo % (len(_ACTIONS) * len(pool))
                action = _ACTIONS[rest // len(pool)]
                clause = pool[rest % len(pool)]
                natural = f"{subject} shall {action} {cue} {clause}."
                gold = (f"{cue.capitalize()} {clause}, {_mid(subject)} "
                        f"shall {action}.")
                rows.append((natural, gold))
        texts[cat] = rows

    records = []
    for j in range(n_per_class):
        for cat in CANONICAL_ORDER:
            natural, gold = texts[cat][j]
            records.append(RequirementRecord(
                id=j * len(CANONICAL_ORDER) + int(cat),
                natural=natural, label=cat, gold_ears=gold))
    return records
