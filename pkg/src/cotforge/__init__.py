"""cotforge: human-in-the-loop annotation pipeline for video CoT datasets."""

from .model import (
    CandidateStatus,
    CandidateVariant,
    CoTCandidate,
    GroundingAnnotation,
    Keyword,
    Language,
    MentionReport,
    QAKind,
    QAPair,
    QualityScore,
    RefinementEvent,
    TermEntry,
    TopicItem,
    VideoSample,
    validate_sample,
)
from .lexical import NGramModel, PosLexicon, match_mentions, perplexity, tag_pos, tokenize, train_lm
from .scoring import RoutingDecision, ScoringConfig, route, score_candidate, score_text
from .pool import AnnotationPool
from .orchestrator import Orchestrator, RoundReport
from .exporter import build_topicqa, export, split
from .evalharness import EvalRecord, acc_mc, acc_oe_judge, acc_oe_keywords, length_distribution, top_words

__version__ = "0.1.0"
