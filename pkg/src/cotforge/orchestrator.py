"""The active-learning loop: generate, score, route, refine, repeat.

Each round drafts a rationale for every available pending QA pair, scores
it, and either finalizes it or hands it to the review queue. Expert
refinements flow back in through ``ingest_refinement``, which also feeds
the prompt generator's training pool so later rounds generate better text.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .lexical import NGramModel, PosLexicon, load_default_lexicon
from .model import (
    CandidateStatus,
    CandidateVariant,
    CoTCandidate,
    QAPair,
    RefinementEvent,
    VideoSample,
)
from .pool import AnnotationPool, QAKey
from .providers import ProviderError, Providers, candidate_id_for
from .scoring import RoutingDecision, ScoringConfig, route, score_candidate

HISTOGRAM_BUCKETS = 10


class NothingToDo(RuntimeError):
    """run_round was invoked with no available pending QA pairs."""


class RefinementRejected(ValueError):
    """Refinement referenced an unknown or non-queued candidate."""


@dataclass(frozen=True)
class RoundReport:
    round: int
    generated: int
    accepted: int
    queued: int
    failed: int
    mean_score: float
    mean_accepted_score: float
    score_histogram: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "generated": self.generated,
            "accepted": self.accepted,
            "queued": self.queued,
            "failed": self.failed,
            "mean_score": self.mean_score,
            "mean_accepted_score": self.mean_accepted_score,
            "score_histogram": dict(self.score_histogram),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoundReport":
        return cls(
            round=d["round"],
            generated=d["generated"],
            accepted=d["accepted"],
            queued=d["queued"],
            failed=d.get("failed", 0),
            mean_score=d["mean_score"],
            mean_accepted_score=d.get("mean_accepted_score", 0.0),
            score_histogram=dict(d.get("score_histogram", {})),
        )


def histogram_bucket(score: float) -> str:
    idx = min(int(score * HISTOGRAM_BUCKETS), HISTOGRAM_BUCKETS - 1)
    lo = idx / HISTOGRAM_BUCKETS
    hi = (idx + 1) / HISTOGRAM_BUCKETS
    return f"{lo:.1f}-{hi:.1f}"


def generate_candidate(
    sample: VideoSample,
    qa: QAPair,
    providers: Providers,
    round_no: int,
    *,
    retry_limit: int = 3,
    backoff_base: float = 0.0,
    sleep: Callable[[float], None] = time.sleep,
) -> CoTCandidate:
    """Prompt then generate, retrying provider failures with backoff.

    Raises ProviderError once the retry limit is exhausted; the caller
    parks the pair as failed-pending-retry.
    """
    variant = (
        CandidateVariant.TOPIC_COT
        if qa.kind.value == "topic_relevance"
        else CandidateVariant.VIDEO_COT
    )
    last_error: Optional[Exception] = None
    for attempt in range(retry_limit):
        try:
            prompt = providers.prompt_generator.summarize(
                sample.description, qa.question, qa.answer
            )
            text = providers.cot_generator.generate(prompt)
            return CoTCandidate(
                candidate_id=candidate_id_for(sample.video_id, qa.qa_id, round_no, text),
                qa_id=qa.qa_id,
                video_id=sample.video_id,
                text=text,
                variant=variant,
                round=round_no,
                prompt_used=prompt,
            )
        except ProviderError as exc:
            last_error = exc
            if attempt + 1 < retry_limit and backoff_base > 0:
                sleep(backoff_base * (2**attempt))
    raise ProviderError(f"retries exhausted: {last_error}")


@dataclass
class Orchestrator:
    pool: AnnotationPool
    providers: Providers
    scoring_config: ScoringConfig
    lm: NGramModel
    pos_lexicon: PosLexicon = field(default_factory=load_default_lexicon)
    batch_size: Optional[int] = None
    retry_limit: int = 3
    backoff_base: float = 0.0
    # Prompt-generator update cadence: flush the training buffer whenever it
    # reaches this many pairs; run_until_converged also flushes every round.
    update_batch_size: int = 1
    rounds_run: int = 0
    reports: list[RoundReport] = field(default_factory=list)
    refinement_log: list[RefinementEvent] = field(default_factory=list)
    # Called with each queued candidate so the review service can enqueue it.
    on_queue: Optional[Callable[[CoTCandidate, VideoSample], None]] = None
    _update_buffer: list[tuple[dict, str]] = field(default_factory=list)
    _next_event_id: int = 1

    def run_round(self) -> RoundReport:
        available = self.pool.available_pending()
        if not available:
            raise NothingToDo("no pending QA pairs available for generation")
        if self.batch_size is not None:
            available = available[: self.batch_size]

        self.rounds_run += 1
        round_no = self.rounds_run
        accepted = queued = failed = 0
        scores: list[float] = []
        accepted_scores: list[float] = []
        histogram: dict[str, int] = {}

        for video_id, qa_id in available:
            sample = self.pool.samples[video_id]
            qa = sample.qa(qa_id)
            try:
                candidate = generate_candidate(
                    sample,
                    qa,
                    self.providers,
                    round_no,
                    retry_limit=self.retry_limit,
                    backoff_base=self.backoff_base,
                )
            except ProviderError as exc:
                failed += 1
                self.pool.failed[(video_id, qa_id)] = str(exc)
                continue
            self.pool.failed.pop((video_id, qa_id), None)
            quality = score_candidate(
                candidate, sample, self.scoring_config, self.lm, self.pos_lexicon
            )
            candidate = candidate.advance(CandidateStatus.SCORED, score=quality)
            scores.append(quality.aggregate)
            histogram[histogram_bucket(quality.aggregate)] = (
                histogram.get(histogram_bucket(quality.aggregate), 0) + 1
            )
            if route(quality.aggregate, self.scoring_config) is RoutingDecision.ACCEPT:
                candidate = candidate.advance(CandidateStatus.ACCEPTED)
                self.pool.mark_accepted(candidate)
                accepted += 1
                accepted_scores.append(quality.aggregate)
            else:
                candidate = candidate.advance(CandidateStatus.QUEUED_FOR_EXPERT)
                self.pool.mark_queued(candidate)
                queued += 1
                if self.on_queue is not None:
                    self.on_queue(candidate, sample)

        report = RoundReport(
            round=round_no,
            generated=accepted + queued,
            accepted=accepted,
            queued=queued,
            failed=failed,
            mean_score=sum(scores) / len(scores) if scores else 0.0,
            mean_accepted_score=(
                sum(accepted_scores) / len(accepted_scores) if accepted_scores else 0.0
            ),
            score_histogram=histogram,
        )
        self.reports.append(report)
        return report

    def next_event_id(self) -> int:
        eid = self._next_event_id
        self._next_event_id += 1
        return eid

    def ingest_refinement(self, event: RefinementEvent) -> None:
        """Apply an expert edit: accept the candidate, grow the training pool."""
        candidate = self.pool.candidates.get(event.candidate_id)
        if candidate is None:
            raise RefinementRejected(f"unknown candidate {event.candidate_id!r}")
        if candidate.status is not CandidateStatus.QUEUED_FOR_EXPERT:
            raise RefinementRejected(
                f"candidate {event.candidate_id!r} is {candidate.status.value}, "
                "not queued_for_expert"
            )
        refined = candidate.advance(
            CandidateStatus.REFINED, text=event.refined_text, score=event.rescored
        )
        accepted = refined.advance(CandidateStatus.ACCEPTED)
        self.pool.mark_accepted(accepted)
        self.refinement_log.append(event)
        self._next_event_id = max(self._next_event_id, event.event_id + 1)

        sample = self.pool.samples[candidate.video_id]
        qa = sample.qa(candidate.qa_id)
        inputs = {
            "description": sample.description,
            "question": qa.question,
            "answer": qa.answer,
        }
        self.pool.training_pairs.append((inputs, event.refined_text))
        self._update_buffer.append((inputs, event.refined_text))
        if len(self._update_buffer) >= self.update_batch_size:
            self.flush_updates()

    def flush_updates(self) -> None:
        if self._update_buffer:
            self.providers.prompt_generator.update(list(self._update_buffer))
            self._update_buffer.clear()

    def run_until_converged(
        self,
        max_rounds: int,
        refiner: Optional[Callable[[CoTCandidate, VideoSample], Optional[RefinementEvent]]] = None,
    ) -> list[RoundReport]:
        """Repeat rounds, interleaving supplied refinements, until done.

        ``refiner`` is called for each queued candidate after a round and may
        return a RefinementEvent (or None to leave it queued).
        """
        if max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        reports: list[RoundReport] = []
        for r in range(max_rounds):
            if not self.pool.available_pending():
                if not self.pool.pending:
                    if not reports:
                        reports.append(empty_report(self.rounds_run + 1))
                    break
                if refiner is None:
                    break  # everything left is queue-owned; nothing to generate
            if self.pool.available_pending():
                reports.append(self.run_round())
            if refiner is not None:
                queued_now = [
                    c
                    for c in sorted(self.pool.candidates.values(), key=lambda c: c.candidate_id)
                    if c.status is CandidateStatus.QUEUED_FOR_EXPERT
                ]
                for candidate in queued_now:
                    event = refiner(candidate, self.pool.samples[candidate.video_id])
                    if event is not None:
                        self.ingest_refinement(event)
            self.flush_updates()
            if not self.pool.pending:
                break
        return reports


def empty_report(round_no: int) -> RoundReport:
    return RoundReport(
        round=round_no,
        generated=0,
        accepted=0,
        queued=0,
        failed=0,
        mean_score=0.0,
        mean_accepted_score=0.0,
        score_histogram={},
    )
