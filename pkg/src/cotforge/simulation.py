"""Shipped closed-loop simulation: synthetic corpus, improving mocks, scripted expert.

Real generation needs remote LLMs; this module exercises the whole loop
offline. The synthetic corpus uses grounding terms from the shipped
lexicons, the mock generator's quality rises with prompt-generator updates,
and the scripted expert rewrites queued rationales into full-coverage text.
"""

from __future__ import annotations

import random
from typing import Optional

from .lexical import NGramModel, train_lm
from .model import (
    CoTCandidate,
    GroundingAnnotation,
    QAKind,
    QAPair,
    RefinementEvent,
    TermEntry,
    VideoSample,
    utc_now,
)
from .orchestrator import Orchestrator
from .pool import AnnotationPool
from .scoring import ScoringConfig, score_text

OBJECT_POOL = (
    "girl", "boy", "man", "woman", "dog", "cat", "ball", "road", "track",
    "car", "tree", "table", "chair", "hurdle", "pool", "stage", "guitar",
)
ACTION_POOL = (
    "run", "jump", "walk", "dance", "climb", "swim", "throw", "kick",
    "ride", "slide", "push", "pull",
)
OPTION_TEXTS = ("keeps moving", "stops suddenly", "leaves the scene")


def make_sample(index: int, rng: random.Random) -> VideoSample:
    objects = rng.sample(OBJECT_POOL, 3)
    actions = rng.sample(ACTION_POOL, 2)
    answer = rng.choice("ABC")
    description = (
        f"The {objects[0]} and the {objects[1]} are near the {objects[2]}. "
        f"The {objects[0]} {actions[0]}s and the {objects[1]} {actions[1]}s."
    )
    qa = QAPair(
        qa_id=f"q{index:04d}",
        question=f"What does the {objects[0]} do?",
        answer=answer,
        kind=QAKind.MC,
        options=tuple(zip("ABC", OPTION_TEXTS)),
    )
    return VideoSample(
        video_id=f"vid{index:04d}",
        source="synthetic",
        description=description,
        grounding=GroundingAnnotation(
            objects=tuple(TermEntry(term=o) for o in objects),
            actions=tuple(TermEntry(term=a) for a in actions),
        ),
        qa_pairs=(qa,),
    )


def make_synthetic_pool(n: int, seed: int = 0) -> AnnotationPool:
    rng = random.Random(seed)
    pool = AnnotationPool()
    pool.add_samples(make_sample(i, rng) for i in range(n))
    return pool


def simulation_scoring_config() -> ScoringConfig:
    # Calibrated fluency: synthetic texts are short, so raw 1/PPL would
    # dominate the separation between draft and refined rationales.
    return ScoringConfig.default(ppl_reference=50000.0)


def simulation_lm(pool: AnnotationPool) -> NGramModel:
    """Trigram model over each sample's ideal rationale text."""
    corpus = [
        ideal_rationale(sample, sample.qa_pairs[0]) for sample in pool.samples.values()
    ]
    return train_lm(corpus, order=3)


def ideal_rationale(sample: VideoSample, qa: QAPair) -> str:
    return (
        "The video scene is shown here. "
        f"{sample.description} "
        "While this happens, everything stays next to each other. "
        f"Therefore, the answer is {qa.answer}."
    )


def make_scripted_expert(
    orchestrator: Orchestrator, expert_id: str = "sim-expert"
):
    """Refiner callback rewriting any queued candidate into the ideal text."""

    def refiner(candidate: CoTCandidate, sample: VideoSample) -> Optional[RefinementEvent]:
        qa = sample.qa(candidate.qa_id)
        refined_text = ideal_rationale(sample, qa)
        if refined_text == candidate.text:
            refined_text += " This was verified by an expert."
        rescored = score_text(
            refined_text,
            sample,
            candidate.variant,
            orchestrator.scoring_config,
            orchestrator.lm,
            orchestrator.pos_lexicon,
        )
        return RefinementEvent(
            event_id=orchestrator.next_event_id(),
            candidate_id=candidate.candidate_id,
            expert_id=expert_id,
            original_text=candidate.text,
            refined_text=refined_text,
            timestamp=utc_now(),
            rescored=rescored,
        )

    return refiner
