"""Pluggable prompt-generator and CoT-generator providers.

Two provider kinds drive generation: a prompt generator that summarizes
(description, question, answer) into a guidance prompt and learns from
expert refinements, and a CoT generator that turns a prompt into a
rationale. Mocks are deterministic given a seed; remote providers record
request/response transcripts so runs can be replayed offline.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Protocol, Sequence

import httpx


class ProviderError(RuntimeError):
    """A provider call failed; the orchestrator may retry."""


class PromptGenerator(Protocol):
    def summarize(self, description: str, question: str, answer: str) -> str: ...

    def update(self, training_pairs: Sequence[tuple[dict, str]]) -> int: ...


class CoTGenerator(Protocol):
    def generate(self, prompt: str) -> str: ...


@dataclass
class Providers:
    prompt_generator: PromptGenerator
    cot_generator: CoTGenerator


# --- mocks -------------------------------------------------------------------


class MockPromptGenerator:
    """Deterministic template summarizer whose guidance level rises with updates."""

    def __init__(self, seed: int = 0, level: int = 0):
        self.seed = seed
        self.level = level
        self.update_calls: list[int] = []

    def summarize(self, description: str, question: str, answer: str) -> str:
        return (
            f"LEVEL: {self.level}\n"
            f"DESCRIPTION: {description}\n"
            f"QUESTION: {question}\n"
            f"ANSWER: {answer}"
        )

    def update(self, training_pairs: Sequence[tuple[dict, str]]) -> int:
        self.update_calls.append(len(training_pairs))
        self.level += 1
        return len(training_pairs)


_PROMPT_FIELD_RE = re.compile(r"^(LEVEL|DESCRIPTION|QUESTION|ANSWER): (.*)$", re.M)


def parse_mock_prompt(prompt: str) -> dict[str, str]:
    return {m.group(1).lower(): m.group(2) for m in _PROMPT_FIELD_RE.finditer(prompt)}


class ImprovingMockCoTGenerator:
    """Rationale mock whose quality tracks the prompt's guidance level.

    Level 0 quotes less than half of the description and invents an object;
    level 1 adds scene/relation/summary phrasing and most of the description;
    level 2+ reproduces the full description, so coverage of grounded terms
    is complete.
    """

    COVERAGE = {0: 0.4, 1: 0.6}

    def __init__(self, seed: int = 0):
        self.seed = seed

    def generate(self, prompt: str) -> str:
        fields = parse_mock_prompt(prompt)
        level = int(fields.get("level", 0))
        description = fields.get("description", "")
        answer = fields.get("answer", "")
        words = description.split()
        coverage = self.COVERAGE.get(level, 1.0)
        kept = words if coverage >= 1.0 else words[: max(1, int(len(words) * coverage))]
        parts = [" ".join(kept).rstrip(".") + "."]
        if level == 0:
            parts.append("A unicorn wanders through.")
            parts.append(f"The answer might be {answer}.")
        else:
            parts.insert(0, "The video scene is shown here.")
            parts.append("While this happens, everything stays next to each other.")
            parts.append(f"Therefore, the answer is {answer}.")
        return " ".join(parts)


class ScriptedCoTGenerator:
    """Plays back a fixed sequence of outputs (or errors) for loop tests."""

    def __init__(self, script: Sequence[Any]):
        self.script = list(script)
        self.calls = 0

    def generate(self, prompt: str) -> str:
        if not self.script:
            raise ProviderError("script exhausted")
        self.calls += 1
        item = self.script.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def mock_providers(seed: int = 0) -> Providers:
    return Providers(
        prompt_generator=MockPromptGenerator(seed=seed),
        cot_generator=ImprovingMockCoTGenerator(seed=seed),
    )


# --- transcript record/replay --------------------------------------------------


class TranscriptRecorder:
    """Append-only JSONL log of provider request/response pairs."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def record(self, kind: str, request: dict, response: str) -> None:
        line = json.dumps(
            {"kind": kind, "request": request, "response": response},
            ensure_ascii=False,
        )
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")


class TranscriptReplayer:
    """Serves recorded responses in order, verifying each request matches."""

    def __init__(self, path: str | Path):
        self.entries = [
            json.loads(line)
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        self.cursor = 0

    def replay(self, kind: str, request: dict) -> str:
        if self.cursor >= len(self.entries):
            raise ProviderError("transcript exhausted")
        entry = self.entries[self.cursor]
        if entry["kind"] != kind or entry["request"] != request:
            raise ProviderError(
                f"transcript mismatch at entry {self.cursor}: expected "
                f"{entry['kind']}, got {kind}"
            )
        self.cursor += 1
        return entry["response"]


class RecordingProviders:
    """Wraps live providers, writing every exchange to a transcript."""

    def __init__(self, inner: Providers, recorder: TranscriptRecorder):
        self.inner = inner
        self.recorder = recorder

    def summarize(self, description: str, question: str, answer: str) -> str:
        request = {"description": description, "question": question, "answer": answer}
        response = self.inner.prompt_generator.summarize(description, question, answer)
        self.recorder.record("summarize", request, response)
        return response

    def update(self, training_pairs: Sequence[tuple[dict, str]]) -> int:
        ack = self.inner.prompt_generator.update(training_pairs)
        self.recorder.record(
            "update", {"pairs": len(training_pairs)}, str(ack)
        )
        return ack

    def generate(self, prompt: str) -> str:
        response = self.inner.cot_generator.generate(prompt)
        self.recorder.record("generate", {"prompt": prompt}, response)
        return response

    def as_providers(self) -> Providers:
        return Providers(prompt_generator=self, cot_generator=self)


class ReplayProviders:
    """Deterministic offline providers backed by a recorded transcript."""

    def __init__(self, replayer: TranscriptReplayer):
        self.replayer = replayer

    def summarize(self, description: str, question: str, answer: str) -> str:
        return self.replayer.replay(
            "summarize",
            {"description": description, "question": question, "answer": answer},
        )

    def update(self, training_pairs: Sequence[tuple[dict, str]]) -> int:
        return int(self.replayer.replay("update", {"pairs": len(training_pairs)}))

    def generate(self, prompt: str) -> str:
        return self.replayer.replay("generate", {"prompt": prompt})

    def as_providers(self) -> Providers:
        return Providers(prompt_generator=self, cot_generator=self)


# --- remote HTTP providers ----------------------------------------------------


class HttpPromptGenerator:
    """POSTs summarize/update requests to a remote endpoint as JSON."""

    def __init__(self, endpoint: str, api_key: Optional[str] = None, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self.timeout = timeout

    def _post(self, path: str, payload: dict) -> dict:
        try:
            resp = httpx.post(
                f"{self.endpoint}{path}",
                json=payload,
                headers=self.headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()
        except httpx.HTTPError as exc:
            raise ProviderError(str(exc)) from exc

    def summarize(self, description: str, question: str, answer: str) -> str:
        body = self._post(
            "/summarize",
            {"description": description, "question": question, "answer": answer},
        )
        return body["prompt"]

    def update(self, training_pairs: Sequence[tuple[dict, str]]) -> int:
        body = self._post(
            "/update",
            {"pairs": [{"inputs": inputs, "refined": text} for inputs, text in training_pairs]},
        )
        return int(body.get("accepted", len(training_pairs)))


class HttpCoTGenerator:
    def __init__(self, endpoint: str, api_key: Optional[str] = None, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self.timeout = timeout

    def generate(self, prompt: str) -> str:
        try:
            resp = httpx.post(
                f"{self.endpoint}/generate",
                json={"prompt": prompt},
                headers=self.headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()["text"]
        except httpx.HTTPError as exc:
            raise ProviderError(str(exc)) from exc


def candidate_id_for(video_id: str, qa_id: str, round_no: int, text: str) -> str:
    digest = hashlib.sha256(f"{video_id}|{qa_id}|{round_no}|{text}".encode()).hexdigest()
    return f"cand-{digest[:16]}"
