"""Text-generation clients: an HTTP client plus offline mocks.

The HTTP client speaks the JSON protocol of a local inference server:
POST {"model", "prompt", "stream": false, "options": {"temperature"}}
to <endpoint>/api/generate and read the "response" field. Connection
errors and timeouts are retried with exponential backoff; HTTP error
statuses and malformed bodies fail immediately.

Mocks implement the same generate() shape so the whole pipeline runs
offline and deterministically (they report zero latency for byte-stable
experiment outputs).
"""

from __future__ import annotations

import dataclasses
import time
from typing import Protocol

import requests


class GeneratorError(RuntimeError):
    """Generation failed after any configured retries."""


@dataclasses.dataclass(frozen=True)
class GeneratorConfig:
    endpoint: str = "http://localhost:11434"
    model: str = "llama3.1:8b"
    temperature: float = 0.0
    timeout_s: float = 120.0
    max_retries: int = 2
    backoff_ms: float = 250.0

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.backoff_ms < 0:
            raise ValueError("backoff_ms must be >= 0")


@dataclasses.dataclass(frozen=True)
class GenerationResult:
    raw: str
    cleaned: str
    latency_ms: float
    attempts: int


_LABEL = "ears requirement:"


def clean_response(raw: str) -> str:
    """Normalize a model reply down to the bare rewritten requirement.

    One pass trims whitespace, drops a leading "EARS Requirement:"
    label (case-insensitive) and removes one symmetric pair of
    surrounding double quotes; passes repeat until nothing changes,
    which makes the function idempotent by construction.
    """
    text = raw
    while True:
        prev = text
        text = text.strip()
        if text.lower().startswith(_LABEL):
            text = text[len(_LABEL):].strip()
        if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
            text = text[1:-1].strip()
        if text == prev:
            return text


class TextGenerator(Protocol):
    """Anything that turns a prompt into a GenerationResult."""

    def generate(self, prompt: str) -> GenerationResult: ...


@dataclasses.dataclass(frozen=True)
class HttpGenerator:
    config: GeneratorConfig = dataclasses.field(default_factory=GeneratorConfig)

    def generate(self, prompt: str) -> GenerationResult:
        cfg = self.config
        url = cfg.endpoint.rstrip("/") + "/api/generate"
        body = {
            "model": cfg.model,
            "prompt": prompt,
            "stream": False,
            "options": {"temperature": cfg.temperature},
        }
        started = time.perf_counter()
        attempts = 0
        while True:
            attempts += 1
            try:
                resp = requests.post(url, json=body, timeout=cfg.timeout_s)
            except (requests.ConnectionError, requests.Timeout) as exc:
                if attempts > cfg.max_retries:
                    raise GeneratorError(
                        f"request to {url} failed after {attempts} "
                        f"attempt(s): {exc}") from exc
                time.sleep(cfg.backoff_ms * (2 ** (attempts - 1)) / 1000.0)
                continue
            if not 200 <= resp.status_code < 300:
                snippet = resp.text[:200]
                raise GeneratorError(
                    f"endpoint returned HTTP {resp.status_code}: {snippet}")
            try:
                payload = resp.json()
            except ValueError as exc:
                raise GeneratorError(
                    f"endpoint returned non-JSON body: {resp.text[:200]}"
                ) from exc
            if "response" not in payload:
                raise GeneratorError(
                    "endpoint reply is missing the 'response' field")
            raw = str(payload["response"])
            latency_ms = (time.perf_counter() - started) * 1000.0
            return GenerationResult(raw=raw, cleaned=clean_response(raw),
                                    latency_ms=latency_ms, attempts=attempts)


def generate(config: GeneratorConfig, prompt: str) -> GenerationResult:
    """One-shot HTTP generation with the given configuration."""
    return HttpGenerator(config).generate(prompt)


@dataclasses.dataclass(frozen=True)
class MockGoldGenerator:
    """Replies with the gold rewrite of the requirement found in the
    prompt; drives offline end-to-end runs where every score is 1."""

    mapping: dict[str, str]

    def generate(self, prompt: str) -> GenerationResult:
        # Several known texts can appear in one prompt (in-context
        # examples may themselves be dataset rows). The requirement
        # being rewritten sits after any example block, so take the
        # rightmost match; ties go to the longer text.
        best = None
        for natural, gold in self.mapping.items():
            if not natural:
                continue
            pos = prompt.rfind(natural)
            if pos < 0:
                continue
            rank = (pos, len(natural))
            if best is None or rank > best[0]:
                best = (rank, gold)
        if best is None:
            raise GeneratorError("no known requirement found in the prompt")
        raw = best[1]
        return GenerationResult(raw=raw, cleaned=clean_response(raw),
                                latency_ms=0.0, attempts=1)


@dataclasses.dataclass(frozen=True)
class MockFixedGenerator:
    """Always replies with the same text."""

    text: str

    def generate(self, prompt: str) -> GenerationResult:
        return GenerationResult(raw=self.text,
                                cleaned=clean_response(self.text),
                                latency_ms=0.0, attempts=1)


def mock_gold_generator(mapping: dict[str, str]) -> MockGoldGenerator:
    return MockGoldGenerator(mapping=dict(mapping))


def mock_fixed_generator(text: str) -> MockFixedGenerator:
    return MockFixedGenerator(text=text)
