"""Domain types shared by every stage of the annotation pipeline.

All types are immutable values: pipeline stages never mutate a candidate,
they construct a successor via ``advance``/``dataclasses.replace``. The
canonical on-disk form for every type is one JSON object per line (JSONL),
UTF-8, with stable key order so exports are byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Optional


class Language(str, Enum):
    EN = "en"
    ZH = "zh"


class QAKind(str, Enum):
    MC = "MC"
    OE = "OE"
    TOPIC_RELEVANCE = "topic_relevance"


class CandidateVariant(str, Enum):
    VIDEO_COT = "video_cot"
    TOPIC_COT = "topic_cot"


class CandidateStatus(str, Enum):
    GENERATED = "generated"
    SCORED = "scored"
    QUEUED_FOR_EXPERT = "queued_for_expert"
    REFINED = "refined"
    ACCEPTED = "accepted"
    FAILED = "failed"


# Legal lifecycle moves. FAILED is a terminal parking state for candidates
# whose provider calls exhausted their retries.
STATUS_TRANSITIONS: dict[CandidateStatus, frozenset[CandidateStatus]] = {
    CandidateStatus.GENERATED: frozenset(
        {CandidateStatus.SCORED, CandidateStatus.FAILED}
    ),
    CandidateStatus.SCORED: frozenset(
        {CandidateStatus.ACCEPTED, CandidateStatus.QUEUED_FOR_EXPERT}
    ),
    CandidateStatus.QUEUED_FOR_EXPERT: frozenset({CandidateStatus.REFINED}),
    CandidateStatus.REFINED: frozenset({CandidateStatus.ACCEPTED}),
    CandidateStatus.ACCEPTED: frozenset(),
    CandidateStatus.FAILED: frozenset(),
}


class IllegalTransition(ValueError):
    """Raised when a candidate is moved against the status machine."""


@dataclass(frozen=True)
class TermEntry:
    """A canonical term plus the synonyms that count as a mention of it."""

    term: str
    synonyms: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {"term": self.term, "synonyms": list(self.synonyms)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TermEntry":
        return cls(term=d["term"], synonyms=tuple(d.get("synonyms", ())))


@dataclass(frozen=True)
class GroundingAnnotation:
    """Ground-truth object and action terms present in a video."""

    objects: tuple[TermEntry, ...] = ()
    actions: tuple[TermEntry, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "objects": [e.to_dict() for e in self.objects],
            "actions": [e.to_dict() for e in self.actions],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GroundingAnnotation":
        return cls(
            objects=tuple(TermEntry.from_dict(e) for e in d.get("objects", ())),
            actions=tuple(TermEntry.from_dict(e) for e in d.get("actions", ())),
        )


@dataclass(frozen=True)
class TopicItem:
    name: str
    concept_terms: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "concept_terms": list(self.concept_terms)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TopicItem":
        return cls(name=d["name"], concept_terms=tuple(d.get("concept_terms", ())))


@dataclass(frozen=True)
class Keyword:
    keyword: str
    synonyms: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {"keyword": self.keyword, "synonyms": list(self.synonyms)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Keyword":
        return cls(keyword=d["keyword"], synonyms=tuple(d.get("synonyms", ())))


@dataclass(frozen=True)
class QAPair:
    qa_id: str
    question: str
    answer: str
    kind: QAKind = QAKind.OE
    options: tuple[tuple[str, str], ...] = ()  # (label, text)
    keywords: tuple[Keyword, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "qa_id": self.qa_id,
            "question": self.question,
            "options": [list(o) for o in self.options],
            "answer": self.answer,
            "keywords": [k.to_dict() for k in self.keywords],
            "kind": self.kind.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "QAPair":
        return cls(
            qa_id=d["qa_id"],
            question=d["question"],
            answer=d["answer"],
            kind=QAKind(d.get("kind", "OE")),
            options=tuple((o[0], o[1]) for o in d.get("options", ())),
            keywords=tuple(Keyword.from_dict(k) for k in d.get("keywords", ())),
        )


@dataclass(frozen=True)
class VideoSample:
    """One video's textual surrogate flowing through the pipeline."""

    video_id: str
    source: str
    description: str
    grounding: GroundingAnnotation
    qa_pairs: tuple[QAPair, ...]
    topic: Optional[TopicItem] = None
    language: Language = Language.EN

    def qa(self, qa_id: str) -> QAPair:
        for pair in self.qa_pairs:
            if pair.qa_id == qa_id:
                return pair
        raise KeyError(f"unknown qa_id {qa_id!r} in sample {self.video_id!r}")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "video_id": self.video_id,
            "source": self.source,
            "description": self.description,
        }
        if self.topic is not None:
            d["topic"] = self.topic.to_dict()
        d["grounding"] = self.grounding.to_dict()
        d["qa_pairs"] = [q.to_dict() for q in self.qa_pairs]
        d["language"] = self.language.value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "VideoSample":
        return cls(
            video_id=d["video_id"],
            source=d.get("source", ""),
            description=d["description"],
            grounding=GroundingAnnotation.from_dict(d.get("grounding", {})),
            qa_pairs=tuple(QAPair.from_dict(q) for q in d.get("qa_pairs", ())),
            topic=TopicItem.from_dict(d["topic"]) if d.get("topic") else None,
            language=Language(d.get("language", "en")),
        )


@dataclass(frozen=True)
class MentionReport:
    """Which grounded terms a rationale covered and which mentions look hallucinated."""

    pos_objects: tuple[str, ...] = ()
    neg_objects: tuple[str, ...] = ()
    pos_actions: tuple[str, ...] = ()
    neg_actions: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "pos_objects": list(self.pos_objects),
            "neg_objects": list(self.neg_objects),
            "pos_actions": list(self.pos_actions),
            "neg_actions": list(self.neg_actions),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MentionReport":
        return cls(
            pos_objects=tuple(d.get("pos_objects", ())),
            neg_objects=tuple(d.get("neg_objects", ())),
            pos_actions=tuple(d.get("pos_actions", ())),
            neg_actions=tuple(d.get("neg_actions", ())),
        )


@dataclass(frozen=True)
class QualityScore:
    """Per-dimension scores plus the weighted aggregate.

    ``con`` is present only for the topic variant; ``bac``/``rel`` only for
    the video variant. Raw (unclamped) coverage values are kept alongside
    the clamped ones as expert-facing diagnostics.
    """

    ppl: float
    tem: float
    spa: float
    sum: float
    aggregate: float
    raw_spa: float
    raw_tem: float
    mention_report: MentionReport
    bac: Optional[float] = None
    rel: Optional[float] = None
    con: Optional[float] = None
    diagnostics: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"ppl": self.ppl}
        if self.bac is not None:
            d["bac"] = self.bac
        d["tem"] = self.tem
        d["spa"] = self.spa
        if self.rel is not None:
            d["rel"] = self.rel
        if self.con is not None:
            d["con"] = self.con
        d["sum"] = self.sum
        d["aggregate"] = self.aggregate
        d["raw_spa"] = self.raw_spa
        d["raw_tem"] = self.raw_tem
        d["mention_report"] = self.mention_report.to_dict()
        if self.diagnostics:
            d["diagnostics"] = list(self.diagnostics)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "QualityScore":
        return cls(
            ppl=d["ppl"],
            tem=d["tem"],
            spa=d["spa"],
            sum=d["sum"],
            aggregate=d["aggregate"],
            raw_spa=d["raw_spa"],
            raw_tem=d["raw_tem"],
            mention_report=MentionReport.from_dict(d.get("mention_report", {})),
            bac=d.get("bac"),
            rel=d.get("rel"),
            con=d.get("con"),
            diagnostics=tuple(d.get("diagnostics", ())),
        )


@dataclass(frozen=True)
class CoTCandidate:
    """One generated rationale with score, status and round provenance."""

    candidate_id: str
    qa_id: str
    video_id: str
    text: str
    variant: CandidateVariant
    status: CandidateStatus = CandidateStatus.GENERATED
    score: Optional[QualityScore] = None
    round: int = 0
    prompt_used: str = ""
    error: Optional[str] = None

    def advance(self, status: CandidateStatus, **changes: Any) -> "CoTCandidate":
        """Move the candidate along the status machine, rejecting illegal moves."""
        if status not in STATUS_TRANSITIONS[self.status]:
            raise IllegalTransition(
                f"candidate {self.candidate_id}: {self.status.value} -> {status.value}"
            )
        return replace(self, status=status, **changes)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "candidate_id": self.candidate_id,
            "qa_id": self.qa_id,
            "video_id": self.video_id,
            "text": self.text,
            "variant": self.variant.value,
            "status": self.status.value,
            "round": self.round,
            "prompt_used": self.prompt_used,
        }
        if self.score is not None:
            d["score"] = self.score.to_dict()
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CoTCandidate":
        return cls(
            candidate_id=d["candidate_id"],
            qa_id=d["qa_id"],
            video_id=d["video_id"],
            text=d["text"],
            variant=CandidateVariant(d["variant"]),
            status=CandidateStatus(d["status"]),
            score=QualityScore.from_dict(d["score"]) if d.get("score") else None,
            round=d.get("round", 0),
            prompt_used=d.get("prompt_used", ""),
            error=d.get("error"),
        )


@dataclass(frozen=True)
class RefinementEvent:
    """An expert edit, appended to the event log and to the training pool."""

    event_id: int
    candidate_id: str
    expert_id: str
    original_text: str
    refined_text: str
    timestamp: datetime
    rescored: QualityScore

    def __post_init__(self) -> None:
        if not self.refined_text:
            raise ValueError("refined_text must be non-empty")
        if self.refined_text == self.original_text:
            raise ValueError("refined_text must differ from original_text")

    def to_dict(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "candidate_id": self.candidate_id,
            "expert_id": self.expert_id,
            "original_text": self.original_text,
            "refined_text": self.refined_text,
            "timestamp": self.timestamp.astimezone(timezone.utc).isoformat(),
            "rescored": self.rescored.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RefinementEvent":
        return cls(
            event_id=d["event_id"],
            candidate_id=d["candidate_id"],
            expert_id=d["expert_id"],
            original_text=d["original_text"],
            refined_text=d["refined_text"],
            timestamp=datetime.fromisoformat(d["timestamp"]),
            rescored=QualityScore.from_dict(d["rescored"]),
        )


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def to_jsonl(obj: Any) -> str:
    """Serialize a core type (or plain dict) as one canonical JSON line."""
    d = obj.to_dict() if hasattr(obj, "to_dict") else obj
    return json.dumps(d, ensure_ascii=False, separators=(",", ":"))


_MC_LABELS = set("ABCDEFGHIJ")


def validate_sample(sample: VideoSample) -> list[str]:
    """Check every type invariant; violations are data, not failures."""
    violations: list[str] = []
    if not sample.video_id:
        violations.append("video_id: must be non-empty")
    if not sample.description:
        violations.append("description: must be non-empty")

    seen_qa: set[str] = set()
    for qa in sample.qa_pairs:
        where = f"qa_pairs[{qa.qa_id!r}]"
        if not qa.qa_id:
            violations.append("qa_pairs: qa_id must be non-empty")
        elif qa.qa_id in seen_qa:
            violations.append(f"{where}: duplicate qa_id")
        seen_qa.add(qa.qa_id)
        if qa.kind is QAKind.MC:
            if not qa.options:
                violations.append(f"{where}: MC question requires options")
            else:
                labels = [label for label, _ in qa.options]
                if any(len(label) != 1 or label not in _MC_LABELS for label in labels):
                    violations.append(f"{where}: option labels must be single letters")
                if qa.answer not in labels:
                    violations.append(f"{where}: answer not in option labels")
        elif qa.kind is QAKind.TOPIC_RELEVANCE:
            if qa.answer not in ("yes", "no"):
                violations.append(f"{where}: topic_relevance answer must be yes/no")
        if qa.kind is not QAKind.MC and not qa.keywords:
            violations.append(f"{where}: keywords may be empty only for MC")

    if sample.topic is not None:
        if not sample.topic.name:
            violations.append("topic.name: must be non-empty")
        if not sample.topic.concept_terms:
            violations.append("topic.concept_terms: must be non-empty")

    for group_name, entries in (
        ("objects", sample.grounding.objects),
        ("actions", sample.grounding.actions),
    ):
        seen_terms: set[str] = set()
        for entry in entries:
            where = f"grounding.{group_name}[{entry.term!r}]"
            if not entry.term:
                violations.append(f"grounding.{group_name}: empty canonical term")
                continue
            if entry.term != entry.term.lower():
                violations.append(f"{where}: canonical term must be lowercase")
            norm = entry.term.lower().strip()
            if norm in seen_terms:
                violations.append(f"{where}: duplicate canonical term")
            seen_terms.add(norm)
            if any(s.lower().strip() == norm for s in entry.synonyms):
                violations.append(f"{where}: synonyms must not contain the canonical term")

    return violations
