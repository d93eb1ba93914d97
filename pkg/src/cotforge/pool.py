"""Mutable pool of samples, candidates and pending work.

The pool is the single logical writer's view of loop state: the orchestrator
is the only component that mutates it, by installing successor candidate
values. Pending pairs that were routed to the review queue stay pending but
are owned by the queue until a refinement arrives, so rounds never
regenerate them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .model import CoTCandidate, VideoSample, validate_sample

QAKey = tuple[str, str]  # (video_id, qa_id)


class InvalidSample(ValueError):
    def __init__(self, video_id: str, violations: list[str]):
        super().__init__(f"sample {video_id!r}: " + "; ".join(violations))
        self.violations = violations


@dataclass
class AnnotationPool:
    samples: dict[str, VideoSample] = field(default_factory=dict)
    candidates: dict[str, CoTCandidate] = field(default_factory=dict)
    pending: set[QAKey] = field(default_factory=set)
    queue_owned: set[QAKey] = field(default_factory=set)
    failed: dict[QAKey, str] = field(default_factory=dict)
    # (inputs, refined text) pairs produced by expert refinements; the only
    # material the prompt generator is ever updated with.
    training_pairs: list[tuple[dict, str]] = field(default_factory=list)

    def add_sample(self, sample: VideoSample) -> None:
        violations = validate_sample(sample)
        if violations:
            raise InvalidSample(sample.video_id, violations)
        if sample.video_id in self.samples:
            raise ValueError(f"duplicate video_id {sample.video_id!r}")
        self.samples[sample.video_id] = sample
        for qa in sample.qa_pairs:
            self.pending.add((sample.video_id, qa.qa_id))

    def add_samples(self, samples: Iterable[VideoSample]) -> None:
        for s in samples:
            self.add_sample(s)

    def available_pending(self) -> list[QAKey]:
        """Pending pairs not currently owned by the review queue."""
        return sorted(self.pending - self.queue_owned)

    def install(self, candidate: CoTCandidate) -> None:
        self.candidates[candidate.candidate_id] = candidate

    def candidate_key(self, candidate: CoTCandidate) -> QAKey:
        return (candidate.video_id, candidate.qa_id)

    def mark_accepted(self, candidate: CoTCandidate) -> None:
        self.install(candidate)
        self.pending.discard(self.candidate_key(candidate))
        self.queue_owned.discard(self.candidate_key(candidate))

    def mark_queued(self, candidate: CoTCandidate) -> None:
        self.install(candidate)
        self.queue_owned.add(self.candidate_key(candidate))

    def accepted_candidates(self, variant=None) -> list[CoTCandidate]:
        out = [
            c
            for c in self.candidates.values()
            if c.status.value == "accepted"
            and (variant is None or c.variant == variant)
        ]
        out.sort(key=lambda c: (c.video_id, c.qa_id, c.candidate_id))
        return out

    def snapshot_state(self) -> dict:
        """Deterministic structural view, used by replay-equality tests."""
        return {
            "pending": sorted(self.pending),
            "queue_owned": sorted(self.queue_owned),
            "failed": dict(sorted(self.failed.items())),
            "candidates": {
                cid: c.to_dict() for cid, c in sorted(self.candidates.items())
            },
            "training_pairs": list(self.training_pairs),
        }
