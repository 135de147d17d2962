"""Prompt composition: template + auxiliary contributions + requirement.

Templates are literal text with two named slots, {examples_text} and
{natural}, each required exactly once. Composition splices payloads
into the slot positions of the original body in one pass, so payload
text is never re-scanned for slot markers and everything outside the
slots stays byte-identical.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

from .auxiliary import ContextContribution

EXAMPLES_SLOT = "{examples_text}"
NATURAL_SLOT = "{natural}"

# The reference prompt wording. One legacy rendering ran "extra
# text.Requirement:" together on one line; the default inserts a
# newline there, and the run-on form stays available via
# default_template(run_on_label=True) for byte-compatible replays.
_BASE_LINES = (
    "You are an assistant that rewrites requirements using the EARS syntax.",
    "Rewrite the following requirement using the EARS syntax.",
    "Use the examples below as a guide.",
    "{examples_text}",
    "-----",
    "Respond ONLY with the rewritten requirement. Do not add explanations, "
    "comments, or any extra text.",
    "Requirement:",
    "{natural}",
    "",
    "EARS Requirement:",
)


@dataclasses.dataclass(frozen=True)
class PromptTemplate:
    """Literal prompt text with the two slots, validated on creation."""

    body: str
    name: str = "custom"

    def __post_init__(self):
        body = self.body.replace("\r\n", "\n").replace("\r", "\n")
        object.__setattr__(self, "body", body)
        for slot in (EXAMPLES_SLOT, NATURAL_SLOT):
            n = body.count(slot)
            if n != 1:
                raise ValueError(
                    f"template {self.name!r} must contain {slot} exactly "
                    f"once, found {n}")


@dataclasses.dataclass(frozen=True)
class ComposedPrompt:
    text: str
    template_name: str
    contribution_kinds: tuple[str, ...]
    record_id: int | None = None


def compose(template: PromptTemplate,
            contributions: Sequence[ContextContribution],
            natural_text: str,
            record_id: int | None = None) -> ComposedPrompt:
    """Fill both slots; contributions join in the given order."""
    if not natural_text:
        raise ValueError("natural_text must be non-empty")
    examples_text = "\n\n".join(c.payload for c in contributions)
    body = template.body
    slots = sorted(
        ((body.index(EXAMPLES_SLOT), EXAMPLES_SLOT, examples_text),
         (body.index(NATURAL_SLOT), NATURAL_SLOT, natural_text)))
    pieces = []
    cursor = 0
    for pos, slot, value in slots:
        pieces.append(body[cursor:pos])
        pieces.append(value)
        cursor = pos + len(slot)
    pieces.append(body[cursor:])
    return ComposedPrompt(
        text="".join(pieces),
        template_name=template.name,
        contribution_kinds=tuple(c.kind for c in contributions),
        record_id=record_id,
    )


def default_template(run_on_label: bool = False) -> PromptTemplate:
    """The standard enriched-prompt template.

    run_on_label=True keeps the legacy run-on line
    "...any extra text.Requirement:" instead of splitting it.
    """
    lines = list(_BASE_LINES)
    if run_on_label:
        respond, label = lines[5], lines[6]
        lines[5:7] = [respond + label]
    return PromptTemplate(body="\n".join(lines), name="default")


def zero_shot_template() -> PromptTemplate:
    """The default template minus the example-guide block.

    The {examples_text} slot is kept (the type requires it) but sits
    flush against the next line, so substituting the empty string
    yields exactly the template with the three example lines removed.
    """
    lines = list(_BASE_LINES)
    del lines[2:5]  # guide line, slot line, "-----" separator
    lines[2] = "{examples_text}" + lines[2]
    return PromptTemplate(body="\n".join(lines), name="zero-shot")


def load_template(path, name: str | None = None) -> PromptTemplate:
    """Read a template body from a text file."""
    with open(path, encoding="utf-8") as fh:
        body = fh.read()
    return PromptTemplate(body=body, name=name or str(path))
