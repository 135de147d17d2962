"""Requirements dataset: records, CSV loading, splits and CV folds."""

from __future__ import annotations

import csv
import enum
import random
import re
from dataclasses import dataclass
from pathlib import Path


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid split parameters."""


class EarsCategory(enum.IntEnum):
    """The five EARS requirement categories, in canonical order.

    The integer value doubles as the class index in feature matrices,
    confusion matrices and vote histograms; the canonical order is the
    tie-break order everywhere in the system.
    """

    EVENT_DRIVEN = 0
    OPTIONAL = 1
    STATE_DRIVEN = 2
    UBIQUITOUS = 3
    UNWANTED_BEHAVIOR = 4

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]


_DISPLAY_NAMES = {
    EarsCategory.EVENT_DRIVEN: "Event-driven",
    EarsCategory.OPTIONAL: "Optional",
    EarsCategory.STATE_DRIVEN: "State-driven",
    EarsCategory.UBIQUITOUS: "Ubiquitous",
    EarsCategory.UNWANTED_BEHAVIOR: "Unwanted behavior",
}

CANONICAL_ORDER: tuple[EarsCategory, ...] = tuple(EarsCategory)

# Lookup key: lowercase with all whitespace and hyphens removed, so that
# "Event-driven", "event driven" and "EventDriven" all match.
_LABEL_KEYS = {
    re.sub(r"[\s\-]+", "", name.lower()): cat
    for cat, name in _DISPLAY_NAMES.items()
}


def parse_label(text: str) -> EarsCategory:
    """Parse a category label, insensitive to case, spaces and hyphens."""
    key = re.sub(r"[\s\-]+", "", text.strip().lower())
    try:
        return _LABEL_KEYS[key]
    except KeyError:
        raise DatasetError(f"unknown EARS category label: {text!r}") from None


@dataclass(frozen=True)
class RequirementRecord:
    """One dataset row: free-form text, its category, and the gold rewrite."""

    id: int
    natural: str
    label: EarsCategory
    gold_ears: str

    def __post_init__(self):
        if self.id < 0:
            raise DatasetError(f"record id must be non-negative, got {self.id}")
        if not self.natural.strip():
            raise DatasetError(f"record {self.id}: empty natural text")
        if not self.gold_ears.strip():
            raise DatasetError(f"record {self.id}: empty gold EARS text")


@dataclass(frozen=True)
class DatasetSplit:
    train_ids: frozenset[int]
    test_ids: frozenset[int]


@dataclass(frozen=True)
class FoldPlan:
    """Stratified partition of the training ids into k disjoint folds."""

    folds: tuple[frozenset[int], ...]

    @property
    def k(self) -> int:
        return len(self.folds)


DEFAULT_COLUMNS = ("natural", "label", "ears")


def load_dataset(path: str | Path,
                 columns: tuple[str, str, str] = DEFAULT_COLUMNS) -> list[RequirementRecord]:
    """Load records from a UTF-8 CSV with header columns natural,label,ears.

    Ids are assigned 0..n-1 in file order. Quoted fields may contain
    embedded commas and newlines. Raises DatasetError naming the file
    line and offending value on any malformed row.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    nat_col, label_col, ears_col = columns
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in columns:
            if col not in header:
                raise DatasetError(f"{path}: missing column {col!r} (header has {header})")
        for i, row in enumerate(reader):
            line = i + 2  # header is line 1
            natural = (row[nat_col] or "").strip()
            raw_label = (row[label_col] or "").strip()
            ears = (row[ears_col] or "").strip()
            if not natural:
                raise DatasetError(f"{path} line {line}: empty {nat_col!r} field")
            if not ears:
                raise DatasetError(f"{path} line {line}: empty {ears_col!r} field")
            try:
                label = parse_label(raw_label)
            except DatasetError:
                raise DatasetError(
                    f"{path} line {line}: unknown label value {raw_label!r}"
                ) from None
            records.append(RequirementRecord(i, natural, label, ears))
    return records


def save_dataset(records: list[RequirementRecord], path: str | Path,
                 columns: tuple[str, str, str] = DEFAULT_COLUMNS) -> None:
    """Write records as CSV; inverse of load_dataset up to id renumbering."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rec in records:
            writer.writerow([rec.natural, rec.label.display_name, rec.gold_ears])


def _by_class(ids: list[int], labels: dict[int, EarsCategory]) -> dict[EarsCategory, list[int]]:
    grouped: dict[EarsCategory, list[int]] = {}
    for rid in sorted(ids):
        grouped.setdefault(labels[rid], []).append(rid)
    return {cat: grouped[cat] for cat in CANONICAL_ORDER if cat in grouped}


def stratified_split(records: list[RequirementRecord], test_fraction: float,
                     seed: int) -> DatasetSplit:
    """Stratified train/test split.

    Per-class test counts are floor(count * fraction), with the slots
    still missing from round(n * fraction) handed to the classes with
    the largest fractional remainder (ties by canonical order).
    Selection within a class is a seeded shuffle.
    """
    if not records:
        raise DatasetError("cannot split an empty dataset")
    if not 0.0 <= test_fraction < 1.0:
        raise DatasetError(f"test_fraction must be in [0, 1), got {test_fraction}")
    labels = {rec.id: rec.label for rec in records}
    grouped = _by_class(list(labels), labels)

    n = len(records)
    target_total = int(n * test_fraction + 0.5)
    quota = {}
    remainders = []
    for cat, ids in grouped.items():
        exact = len(ids) * test_fraction
        quota[cat] = int(exact)
        remainders.append((-(exact - int(exact)), cat))
    leftover = target_total - sum(quota.values())
    for _, cat in sorted(remainders)[:leftover]:
        quota[cat] += 1

    rng = random.Random(seed)
    test_ids: set[int] = set()
    for cat, ids in grouped.items():
        pool = list(ids)
        rng.shuffle(pool)
        test_ids.update(pool[:quota[cat]])
    train_ids = set(labels) - test_ids
    return DatasetSplit(frozenset(train_ids), frozenset(test_ids))


def make_folds(train_ids: set[int] | frozenset[int],
               labels: dict[int, EarsCategory], k: int, seed: int) -> FoldPlan:
    """Deal the training ids into k stratified folds.

    Within each class the shuffled ids go round-robin to the folds; the
    dealing position carries over between classes so fold sizes stay
    within one of each other overall.
    """
    if k < 2:
        raise DatasetError(f"k must be >= 2, got {k}")
    grouped = _by_class([i for i in train_ids], {i: labels[i] for i in train_ids})
    for cat, ids in grouped.items():
        if len(ids) < k:
            raise DatasetError(
                f"k={k} exceeds the {len(ids)} training records of class "
                f"{cat.display_name!r}"
            )
    rng = random.Random(seed)
    folds: list[set[int]] = [set() for _ in range(k)]
    cursor = 0
    for ids in grouped.values():
        pool = list(ids)
        rng.shuffle(pool)
        for rid in pool:
            folds[cursor % k].add(rid)
            cursor += 1
    return FoldPlan(tuple(frozenset(f) for f in folds))
