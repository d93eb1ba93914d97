"""Multi-dimension quality scoring and threshold routing for rationales.

The video variant scores six dimensions (fluency, background, temporal,
spatial, relations, summary); the topic variant scores five (fluency,
temporal, spatial, concept, summary). Dimension values are combined as a
weighted sum and candidates below the routing threshold go to experts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

from . import lexical
from .lexical import NGramModel, PosLexicon, SENT_END
from .model import (
    CandidateVariant,
    CoTCandidate,
    GroundingAnnotation,
    MentionReport,
    QualityScore,
    TopicItem,
    VideoSample,
)

DEFAULT_VIDEO_WEIGHTS = (0.1, 0.1, 0.3, 0.3, 0.1, 0.1)  # ppl, bac, tem, spa, rel, sum
DEFAULT_TOPIC_WEIGHTS = (0.1, 0.2, 0.2, 0.4, 0.1)  # ppl, tem, spa, con, sum
DEFAULT_THRESHOLD = 0.9

_WEIGHT_TOL = 1e-12


class RoutingDecision(str, Enum):
    ACCEPT = "accept"
    EXPERT_QUEUE = "expert_queue"


class CoverageScore(NamedTuple):
    clamped: float
    raw: float
    degenerate: bool  # empty grounding denominator, scored 0 by guard


def _load_patterns(name: str) -> tuple[str, ...]:
    text = lexical._data_text(name)
    return tuple(lexical.read_term_file(text, is_text=True))


@dataclass(frozen=True)
class ScoringConfig:
    video_weights: tuple[float, ...] = DEFAULT_VIDEO_WEIGHTS
    topic_weights: tuple[float, ...] = DEFAULT_TOPIC_WEIGHTS
    threshold: float = DEFAULT_THRESHOLD
    background_patterns: tuple[str, ...] = ()
    relation_patterns: tuple[str, ...] = ()
    summary_patterns: tuple[str, ...] = ()
    clamp_negative: bool = True
    # When set, the fluency dimension is min(1, ppl_reference / PPL) instead
    # of 1 / PPL.
    ppl_reference: Optional[float] = None

    def __post_init__(self) -> None:
        if len(self.video_weights) != 6:
            raise ValueError("video_weights must have 6 entries")
        if len(self.topic_weights) != 5:
            raise ValueError("topic_weights must have 5 entries")
        for name, weights in (("video", self.video_weights), ("topic", self.topic_weights)):
            if abs(math.fsum(weights) - 1.0) > _WEIGHT_TOL:
                raise ValueError(f"{name}_weights must sum to 1 within {_WEIGHT_TOL}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")

    @classmethod
    def default(cls, **overrides) -> "ScoringConfig":
        base = dict(
            background_patterns=_load_patterns("background_patterns.txt"),
            relation_patterns=_load_patterns("relation_patterns.txt"),
            summary_patterns=_load_patterns("summary_patterns.txt"),
        )
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return {
            "video_weights": list(self.video_weights),
            "topic_weights": list(self.topic_weights),
            "threshold": self.threshold,
            "background_patterns": list(self.background_patterns),
            "relation_patterns": list(self.relation_patterns),
            "summary_patterns": list(self.summary_patterns),
            "clamp_negative": self.clamp_negative,
            "ppl_reference": self.ppl_reference,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoringConfig":
        return cls(
            video_weights=tuple(d.get("video_weights", DEFAULT_VIDEO_WEIGHTS)),
            topic_weights=tuple(d.get("topic_weights", DEFAULT_TOPIC_WEIGHTS)),
            threshold=d.get("threshold", DEFAULT_THRESHOLD),
            background_patterns=tuple(d.get("background_patterns", ())),
            relation_patterns=tuple(d.get("relation_patterns", ())),
            summary_patterns=tuple(d.get("summary_patterns", ())),
            clamp_negative=d.get("clamp_negative", True),
            ppl_reference=d.get("ppl_reference"),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ScoringConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")


def _pattern_in_tokens(tokens: list[str], pattern: str) -> bool:
    needle = lexical.content_tokens(pattern)
    return lexical._subsequence_at(tokens, needle, fold=False)


def score_perplexity_dim(text: str, model: NGramModel, config: Optional[ScoringConfig] = None) -> float:
    """Fluency dimension: reciprocal perplexity, computed in log space.

    With a configured reference perplexity the calibrated form
    min(1, PPL_ref / PPL) is used instead.
    """
    if not text or not lexical.tokenize(text):
        raise ValueError("text must tokenize to at least one token")
    avg = lexical.mean_log_prob(model, text)
    if config is not None and config.ppl_reference is not None:
        return min(1.0, config.ppl_reference * math.exp(avg))
    # exp(mean log p) == 1 / PPL with one fewer rounding step
    return math.exp(avg)


def score_background(text: str, patterns: Sequence[str]) -> int:
    tokens = lexical.content_tokens(text)
    return int(any(_pattern_in_tokens(tokens, p) for p in patterns))


def score_relations(text: str, patterns: Sequence[str]) -> int:
    tokens = lexical.content_tokens(text)
    return int(any(_pattern_in_tokens(tokens, p) for p in patterns))


def score_summary(text: str, patterns: Sequence[str]) -> int:
    """1 iff a summary marker occurs in the final two sentences."""
    sents = lexical.sentences(text)
    window: list[str] = [tok for sent in sents[-2:] for tok in sent]
    return int(any(_pattern_in_tokens(window, p) for p in patterns))


def score_concept(text: str, topic: Optional[TopicItem]) -> int:
    if topic is None:
        raise ValueError("concept dimension requires a topic")
    tokens = lexical.content_tokens(text)
    surfaces = (topic.name, *topic.concept_terms)
    return int(any(_pattern_in_tokens(tokens, s) for s in surfaces))


def _coverage(pos_count: int, neg_count: int, denominator: int, clamp: bool) -> CoverageScore:
    if denominator == 0:
        return CoverageScore(0.0, 0.0, True)
    raw = (pos_count - neg_count) / denominator
    clamped = min(1.0, max(0.0, raw)) if clamp else raw
    return CoverageScore(clamped, raw, False)


def score_spatial(
    report: MentionReport, grounding: GroundingAnnotation, *, clamp: bool = True
) -> CoverageScore:
    """(matched objects - hallucinated nouns) / grounded object count."""
    return _coverage(
        len(report.pos_objects), len(report.neg_objects), len(grounding.objects), clamp
    )


def score_temporal(
    report: MentionReport, grounding: GroundingAnnotation, *, clamp: bool = True
) -> CoverageScore:
    """(matched actions - hallucinated verbs) / grounded action count."""
    return _coverage(
        len(report.pos_actions), len(report.neg_actions), len(grounding.actions), clamp
    )


def aggregate(
    dimensions: Sequence[float], variant: CandidateVariant, config: ScoringConfig
) -> float:
    weights = (
        config.video_weights
        if variant is CandidateVariant.VIDEO_COT
        else config.topic_weights
    )
    if len(dimensions) != len(weights):
        raise ValueError(
            f"{variant.value} expects {len(weights)} dimensions, got {len(dimensions)}"
        )
    return math.fsum(w * d for w, d in zip(weights, dimensions))


def route(aggregate_score: float, config: ScoringConfig) -> RoutingDecision:
    """Below-threshold candidates go to experts; the boundary is accepted."""
    if not 0.0 <= aggregate_score <= 1.0:
        raise ValueError(f"score {aggregate_score} outside [0, 1]")
    if aggregate_score < config.threshold:
        return RoutingDecision.EXPERT_QUEUE
    return RoutingDecision.ACCEPT


def score_text(
    text: str,
    sample: VideoSample,
    variant: CandidateVariant,
    config: ScoringConfig,
    lm: NGramModel,
    pos_lexicon: Optional[PosLexicon] = None,
) -> QualityScore:
    """Run every dimension scorer for the variant and aggregate."""
    if pos_lexicon is None:
        pos_lexicon = lexical.load_default_lexicon()
    if variant is CandidateVariant.TOPIC_COT and sample.topic is None:
        raise ValueError("topic_cot candidate requires a sample topic")

    ppl_dim = score_perplexity_dim(text, lm, config)
    report = lexical.match_mentions(text, sample.grounding, pos_lexicon)
    spa = score_spatial(report, sample.grounding, clamp=config.clamp_negative)
    tem = score_temporal(report, sample.grounding, clamp=config.clamp_negative)
    summary = score_summary(text, config.summary_patterns)

    diagnostics: list[str] = []
    if spa.degenerate:
        diagnostics.append("spatial: empty grounded object list, scored 0")
    if tem.degenerate:
        diagnostics.append("temporal: empty grounded action list, scored 0")

    if variant is CandidateVariant.VIDEO_COT:
        bac = score_background(text, config.background_patterns)
        rel = score_relations(text, config.relation_patterns)
        dims = (ppl_dim, bac, tem.clamped, spa.clamped, rel, summary)
        agg = aggregate(dims, variant, config)
        return QualityScore(
            ppl=ppl_dim,
            bac=float(bac),
            tem=tem.clamped,
            spa=spa.clamped,
            rel=float(rel),
            sum=float(summary),
            aggregate=agg,
            raw_spa=spa.raw,
            raw_tem=tem.raw,
            mention_report=report,
            diagnostics=tuple(diagnostics),
        )

    con = score_concept(text, sample.topic)
    dims = (ppl_dim, tem.clamped, spa.clamped, con, summary)
    agg = aggregate(dims, variant, config)
    return QualityScore(
        ppl=ppl_dim,
        tem=tem.clamped,
        spa=spa.clamped,
        con=float(con),
        sum=float(summary),
        aggregate=agg,
        raw_spa=spa.raw,
        raw_tem=tem.raw,
        mention_report=report,
        diagnostics=tuple(diagnostics),
    )


def score_candidate(
    candidate: CoTCandidate,
    sample: VideoSample,
    config: ScoringConfig,
    lm: NGramModel,
    pos_lexicon: Optional[PosLexicon] = None,
) -> QualityScore:
    return score_text(candidate.text, sample, candidate.variant, config, lm, pos_lexicon)
