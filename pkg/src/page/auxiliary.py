"""Auxiliary inference modules that enrich prompts with context.

An auxiliary module looks at the natural requirement and produces at
most one ContextContribution: a text block the composer can splice into
the prompt. Three variants are provided: classifier-backed (predicts
the EARS category and returns that category's example pairs),
oracle-label (same lookup, but driven by the record's gold label) and
null (contributes nothing, yielding a plain zero-shot prompt).
"""

from __future__ import annotations

import dataclasses
import json
from typing import Protocol, Sequence

from .dataset import CANONICAL_ORDER, EarsCategory, RequirementRecord, parse_label
from .forest import RandomForestModel, predict
from .textfeat import Vocabulary, tokenize, vectorize

BANK_SCHEMA = "page-bank/1"

EXAMPLES_KIND = "ears-examples"

PAIRS_PER_CATEGORY = 2


@dataclasses.dataclass(frozen=True)
class ContextContribution:
    """One auxiliary result, ready for prompt insertion."""

    kind: str
    payload: str

    def __post_init__(self):
        if not self.kind:
            raise ValueError("contribution kind must be non-empty")


@dataclasses.dataclass(frozen=True)
class ExamplePair:
    requirement: str
    ears: str

    def __post_init__(self):
        if not self.requirement or not self.ears:
            raise ValueError("example pair texts must be non-empty")


@dataclasses.dataclass(frozen=True)
class ExampleBank:
    """Exactly two rewrite examples for every EARS category."""

    pairs: dict[EarsCategory, tuple[ExamplePair, ...]]

    def __post_init__(self):
        for cat in CANONICAL_ORDER:
            got = self.pairs.get(cat)
            if got is None:
                raise ValueError(f"bank is missing {cat.display_name}")
            if len(got) != PAIRS_PER_CATEGORY:
                raise ValueError(
                    f"{cat.display_name} must have exactly "
                    f"{PAIRS_PER_CATEGORY} pairs, got {len(got)}")

    def pairs_for(self, category: EarsCategory) -> tuple[ExamplePair, ...]:
        return self.pairs[EarsCategory(category)]

    def to_json(self) -> dict:
        return {
            "schema": BANK_SCHEMA,
            "examples": {
                cat.display_name: [
                    {"requirement": p.requirement, "ears": p.ears}
                    for p in self.pairs[cat]
                ]
                for cat in CANONICAL_ORDER
            },
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ExampleBank":
        schema = payload.get("schema")
        if schema != BANK_SCHEMA:
            raise ValueError(f"unsupported bank schema: {schema!r}")
        pairs = {}
        for key, items in payload.get("examples", {}).items():
            cat = parse_label(key)
            pairs[cat] = tuple(
                ExamplePair(requirement=item["requirement"],
                            ears=item["ears"])
                for item in items)
        return cls(pairs=pairs)


def load_bank(path) -> ExampleBank:
    with open(path, encoding="utf-8") as fh:
        return ExampleBank.from_json(json.load(fh))


def save_bank(bank: ExampleBank, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bank.to_json(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def default_bank() -> ExampleBank:
    """The embedded example bank used by the shipped experiments."""
    raw = {
        EarsCategory.EVENT_DRIVEN: (
            ("The system shall notify the admin when the server restarts.",
             "When the server restarts, the system shall notify the admin."),
            ("The application shall send a receipt when a purchase is "
             "completed.",
             "When a purchase is completed, the application shall send a "
             "receipt."),
        ),
        EarsCategory.OPTIONAL: (
            ("The system shall enable voice control where the device "
             "supports it.",
             "Where the device supports it, the system shall enable voice "
             "control."),
            ("The application shall provide dark mode where the user has "
             "selected the option.",
             "Where the user has selected the option, the application shall "
             "provide dark mode."),
        ),
        EarsCategory.STATE_DRIVEN: (
            ("The system shall block new logins while maintenance mode is "
             "active.",
             "While maintenance mode is active, the system shall block new "
             "logins."),
            ("The application shall allow offline access while the device "
             "has no internet connection.",
             "While the device has no internet connection, the application "
             "shall allow offline access."),
        ),
        EarsCategory.UBIQUITOUS: (
            ("The system shall log all transactions.",
             "The system shall always log all transactions."),
            ("The application shall keep the session active during user "
             "activity.",
             "The system shall always keep the session active during user "
             "activity."),
        ),
        EarsCategory.UNWANTED_BEHAVIOR: (
            ("The system shall display a warning if unauthorized access is "
             "detected.",
             "If unauthorized access is detected, the system shall display "
             "a warning."),
            ("The application shall stop the upload if the file exceeds the "
             "maximum size.",
             "If the file exceeds the maximum size, the application shall "
             "stop the upload."),
        ),
    }
    return ExampleBank(pairs={
        cat: tuple(ExamplePair(requirement=r, ears=e) for r, e in items)
        for cat, items in raw.items()
    })


def format_examples(pairs: Sequence[ExamplePair]) -> str:
    """Render pairs as requirement/ears line couples split by blank lines."""
    blocks = [
        f'requirement: "{p.requirement}"\nears: "{p.ears}"' for p in pairs
    ]
    return "\n\n".join(blocks)


def infer_classifier(model: RandomForestModel, vocab: Vocabulary,
                     bank: ExampleBank, natural_text: str) -> ContextContribution:
    """Predict the category of the text and contribute its examples."""
    category = predict(model, vectorize(vocab, tokenize(natural_text)))
    return ContextContribution(
        kind=EXAMPLES_KIND,
        payload=format_examples(bank.pairs_for(category)))


def infer_oracle(record: RequirementRecord,
                 bank: ExampleBank | None = None) -> ContextContribution:
    """Contribute the examples of the record's gold category."""
    bank = bank if bank is not None else default_bank()
    return ContextContribution(
        kind=EXAMPLES_KIND,
        payload=format_examples(bank.pairs_for(record.label)))


def infer_null(natural_text: str) -> None:
    """The no-enrichment module: never contributes."""
    return None


class AuxiliaryModule(Protocol):
    """Common shape of all auxiliary modules; stateless after setup."""

    def contribute(self, natural_text: str,
                   record: RequirementRecord | None = None
                   ) -> ContextContribution | None: ...


@dataclasses.dataclass(frozen=True)
class ClassifierAuxiliary:
    """Wraps a trained classifier; the vocabulary may live on the model."""

    model: RandomForestModel
    bank: ExampleBank
    vocab: Vocabulary | None = None

    def _vocabulary(self) -> Vocabulary:
        vocab = self.vocab if self.vocab is not None else self.model.vocabulary
        if vocab is None:
            raise ValueError("classifier auxiliary needs a vocabulary")
        return vocab

    def contribute(self, natural_text: str,
                   record: RequirementRecord | None = None
                   ) -> ContextContribution:
        return infer_classifier(self.model, self._vocabulary(), self.bank,
                                natural_text)


@dataclasses.dataclass(frozen=True)
class OracleAuxiliary:
    bank: ExampleBank

    def contribute(self, natural_text: str,
                   record: RequirementRecord | None = None
                   ) -> ContextContribution:
        if record is None:
            raise ValueError("oracle auxiliary needs the labeled record")
        return infer_oracle(record, self.bank)


@dataclasses.dataclass(frozen=True)
class NullAuxiliary:
    def contribute(self, natural_text: str,
                   record: RequirementRecord | None = None) -> None:
        return infer_null(natural_text)
