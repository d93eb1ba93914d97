"""Accuracy metrics and corpus analyses for exported datasets.

Three accuracy metrics: exact option-label matching for multi-choice,
keyword hits inside the answer's summary span for open-ended, and a
judge-provider verdict for open-ended semantic correctness. Analyses cover
rationale length distributions and per-category top-word rankings.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

from . import lexical
from .lexical import PosLexicon
from .model import Keyword, QAKind, QAPair
from .providers import ProviderError, TranscriptRecorder, TranscriptReplayer


@dataclass(frozen=True)
class EvalRecord:
    qa: QAPair
    model_output: str

    def to_dict(self) -> dict:
        return {"qa": self.qa.to_dict(), "model_output": self.model_output}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalRecord":
        return cls(qa=QAPair.from_dict(d["qa"]), model_output=d["model_output"])


_LABEL_RE = re.compile(r"\b([A-E])\b")


def extract_option_label(output: str) -> Optional[str]:
    """First standalone uppercase A-E token, or None."""
    m = _LABEL_RE.search(output)
    return m.group(1) if m else None


@dataclass
class McResult:
    accuracy: float
    total: int
    correct: int
    unextractable: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "total": self.total,
            "correct": self.correct,
            "unextractable": list(self.unextractable),
        }


def acc_mc(records: Sequence[EvalRecord]) -> McResult:
    """Exact option-label accuracy; unextractable outputs count as wrong."""
    if not records:
        raise ValueError("record list must be non-empty")
    correct = 0
    unextractable: list[str] = []
    for record in records:
        if record.qa.kind is not QAKind.MC:
            raise ValueError(f"record {record.qa.qa_id!r} is not multi-choice")
        label = extract_option_label(record.model_output)
        if label is None:
            unextractable.append(record.qa.qa_id)
        elif label == record.qa.answer:
            correct += 1
    return McResult(
        accuracy=correct / len(records),
        total=len(records),
        correct=correct,
        unextractable=unextractable,
    )


def summary_span_tokens(text: str) -> list[str]:
    """Tokens of the final two sentences, the same window the scorer uses."""
    sents = lexical.sentences(text)
    return [tok for sent in sents[-2:] for tok in sent]


def _keyword_hit(span: list[str], keyword: Keyword) -> bool:
    for surface in (keyword.keyword, *keyword.synonyms):
        if lexical._subsequence_at(span, lexical.content_tokens(surface), fold=True):
            return True
    return False


def acc_oe_keywords(records: Sequence[EvalRecord]) -> float:
    """Mean per-question proportion of gold keywords hit in the summary span."""
    if not records:
        raise ValueError("record list must be non-empty")
    scores = []
    for record in records:
        if not record.qa.keywords:
            raise ValueError(f"record {record.qa.qa_id!r} has no keywords")
        span = summary_span_tokens(record.model_output)
        hits = sum(1 for kw in record.qa.keywords if _keyword_hit(span, kw))
        scores.append(hits / len(record.qa.keywords))
    return sum(scores) / len(scores)


class Judge(Protocol):
    def judge(self, question: str, gold_answer: str, model_output: str) -> bool: ...


class ScriptedJudge:
    """Deterministic judge for tests: verdicts (or exceptions) in order."""

    def __init__(self, verdicts: Sequence):
        self.verdicts = list(verdicts)

    def judge(self, question: str, gold_answer: str, model_output: str) -> bool:
        if not self.verdicts:
            raise ProviderError("verdict script exhausted")
        item = self.verdicts.pop(0)
        if isinstance(item, Exception):
            raise item
        return bool(item)


class RecordingJudge:
    def __init__(self, inner: Judge, recorder: TranscriptRecorder):
        self.inner = inner
        self.recorder = recorder

    def judge(self, question: str, gold_answer: str, model_output: str) -> bool:
        verdict = self.inner.judge(question, gold_answer, model_output)
        self.recorder.record(
            "judge",
            {"question": question, "gold_answer": gold_answer, "model_output": model_output},
            json.dumps(verdict),
        )
        return verdict


class ReplayJudge:
    def __init__(self, replayer: TranscriptReplayer):
        self.replayer = replayer

    def judge(self, question: str, gold_answer: str, model_output: str) -> bool:
        response = self.replayer.replay(
            "judge",
            {"question": question, "gold_answer": gold_answer, "model_output": model_output},
        )
        return json.loads(response)


@dataclass
class JudgeResult:
    accuracy: float
    evaluated: int
    unevaluated: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "evaluated": self.evaluated,
            "unevaluated": self.unevaluated,
        }


def acc_oe_judge(
    records: Sequence[EvalRecord], judge: Judge, *, retry_limit: int = 3
) -> JudgeResult:
    """Fraction of records the judge marks correct.

    Records whose judge calls keep failing are excluded from the denominator
    and reported as unevaluated rather than counted wrong.
    """
    if not records:
        raise ValueError("record list must be non-empty")
    correct = 0
    evaluated = 0
    unevaluated = 0
    for record in records:
        verdict = None
        for _ in range(retry_limit):
            try:
                verdict = judge.judge(
                    record.qa.question, record.qa.answer, record.model_output
                )
                break
            except ProviderError:
                continue
        if verdict is None:
            unevaluated += 1
            continue
        evaluated += 1
        if verdict:
            correct += 1
    accuracy = correct / evaluated if evaluated else 0.0
    return JudgeResult(accuracy=accuracy, evaluated=evaluated, unevaluated=unevaluated)


def length_distribution(texts: Sequence[str], bucket_width: int = 10) -> dict[int, int]:
    """Histogram of word counts; keys are bucket lower bounds."""
    if bucket_width < 1:
        raise ValueError("bucket_width must be >= 1")
    histogram: dict[int, int] = {}
    for text in texts:
        words = len(lexical.content_tokens(text))
        bucket = (words // bucket_width) * bucket_width
        histogram[bucket] = histogram.get(bucket, 0) + 1
    return dict(sorted(histogram.items()))


def top_words(
    texts: Sequence[str],
    category: str,
    k: int,
    lexicon: Optional[PosLexicon] = None,
) -> list[tuple[str, int]]:
    """Top-k most frequent words of one coarse category, ties lexicographic."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if category not in ("noun", "verb", "conjunction"):
        raise ValueError(f"unknown category {category!r}")
    if lexicon is None:
        lexicon = lexical.load_default_lexicon()
    counts: dict[str, int] = {}
    for text in texts:
        for token in lexical.content_tokens(text):
            if lexical.tag_pos(token, lexicon) == category:
                counts[token] = counts.get(token, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def load_eval_records(path: str | Path) -> list[EvalRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(EvalRecord.from_dict(json.loads(line)))
    return records
