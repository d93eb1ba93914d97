"""HTTP review service for the expert refinement workflow.

Exposes the queue, claim/lease coordination, refinement submission and loop
statistics over JSON, persisting everything to the append-only event log.
All state-mutating handlers are serialized through a single writer lock;
reads are unrestricted.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .events import ReviewStore
from .lexical import NGramModel, PosLexicon, load_default_lexicon
from .model import CandidateStatus, QualityScore, RefinementEvent, utc_now
from .orchestrator import Orchestrator
from .pool import AnnotationPool
from .scoring import ScoringConfig, score_text

MAX_PAGE_SIZE = 200
DEFAULT_LEASE_SECONDS = 600.0


class ServiceError(Exception):
    status_code = 400


class NotFound(ServiceError):
    status_code = 404


class Conflict(ServiceError):
    status_code = 409


class Forbidden(ServiceError):
    status_code = 403


class BadRequest(ServiceError):
    status_code = 400


class ReviewService:
    """Queue/claim/refine state machine over a ReviewStore."""

    def __init__(
        self,
        store: ReviewStore,
        pool: AnnotationPool,
        scoring_config: ScoringConfig,
        lm: NGramModel,
        pos_lexicon: Optional[PosLexicon] = None,
        orchestrator: Optional[Orchestrator] = None,
        clock: Callable[[], float] = time.time,
    ):
        self.store = store
        self.pool = pool
        self.scoring_config = scoring_config
        self.lm = lm
        self.pos_lexicon = pos_lexicon or load_default_lexicon()
        self.orchestrator = orchestrator
        self.clock = clock
        self._write_lock = threading.Lock()
        self._next_event_id = 1 + len(self.store.state.refinements)

    # -- queue intake (called by the orchestrator's on_queue hook) ------------

    def enqueue_candidate(self, candidate, sample) -> None:
        qa = sample.qa(candidate.qa_id)
        with self._write_lock:
            self.store.append(
                "candidate_enqueued",
                {
                    "candidate_id": candidate.candidate_id,
                    "video_id": sample.video_id,
                    "qa_id": candidate.qa_id,
                    "question": qa.question,
                    "answer": qa.answer,
                    "variant": candidate.variant.value,
                    "text": candidate.text,
                    "grounding": {
                        "objects": [e.term for e in sample.grounding.objects],
                        "actions": [e.term for e in sample.grounding.actions],
                    },
                    "score": candidate.score.to_dict() if candidate.score else None,
                    "enqueued_at": self.clock(),
                },
            )

    def record_round(self, report) -> None:
        with self._write_lock:
            self.store.append("round_completed", report.to_dict())

    # -- read side --------------------------------------------------------------

    def _claim_view(self, candidate_id: str) -> dict:
        claim = self.store.state.claims.get(candidate_id)
        if claim and claim["lease_expiry"] > self.clock():
            return {"claimed": True, **claim}
        return {"claimed": False}

    def _entry_view(self, entry: dict) -> dict:
        return {**entry, "claim": self._claim_view(entry["candidate_id"])}

    def list_queue(
        self,
        variant: Optional[str] = None,
        min_score: Optional[float] = None,
        max_score: Optional[float] = None,
        page: int = 1,
        page_size: int = 50,
    ) -> dict:
        if not 1 <= page_size <= MAX_PAGE_SIZE:
            raise BadRequest(f"page_size must be in [1, {MAX_PAGE_SIZE}]")
        if page < 1:
            raise BadRequest("page must be >= 1")
        entries = list(self.store.state.entries.values())
        if variant is not None:
            if variant not in ("video_cot", "topic_cot"):
                raise BadRequest(f"unknown variant filter {variant!r}")
            entries = [e for e in entries if e.get("variant") == variant]
        if min_score is not None:
            entries = [e for e in entries if (e.get("score") or {}).get("aggregate", 0.0) >= min_score]
        if max_score is not None:
            entries = [e for e in entries if (e.get("score") or {}).get("aggregate", 0.0) <= max_score]
        # worst first; candidate_id tiebreak keeps pagination stable
        entries.sort(
            key=lambda e: ((e.get("score") or {}).get("aggregate", 0.0), e["candidate_id"])
        )
        start = (page - 1) * page_size
        page_entries = entries[start : start + page_size]
        return {
            "entries": [self._entry_view(e) for e in page_entries],
            "page": page,
            "page_size": page_size,
            "total": len(entries),
        }

    def get_candidate(self, candidate_id: str) -> dict:
        entry = self.store.state.entries.get(candidate_id)
        if entry is not None:
            return self._entry_view(entry)
        candidate = self.pool.candidates.get(candidate_id)
        if candidate is None:
            raise NotFound(f"unknown candidate {candidate_id!r}")
        return candidate.to_dict()

    def stats(self) -> dict:
        state = self.store.state
        generated = sum(r.get("generated", 0) for r in state.round_reports)
        accepted = sum(r.get("accepted", 0) for r in state.round_reports)
        return {
            "queue_depth": len(state.entries),
            "round_reports": list(state.round_reports),
            "acceptance_rate": (accepted / generated) if generated else 0.0,
            "score_histogram": dict(sorted(state.score_histogram.items())),
            "refinements_per_expert": dict(sorted(state.per_expert.items())),
            "refinement_count": len(state.refinements),
        }

    # -- write side ----------------------------------------------------------------

    def claim(self, candidate_id: str, expert_id: str, lease_seconds: float) -> dict:
        if not expert_id:
            raise BadRequest("expert_id must be non-empty")
        if lease_seconds <= 0:
            raise BadRequest("lease_seconds must be positive")
        with self._write_lock:
            entry = self.store.state.entries.get(candidate_id)
            if entry is None:
                raise NotFound(f"unknown candidate {candidate_id!r}")
            now = self.clock()
            claim = self.store.state.claims.get(candidate_id)
            if claim and claim["lease_expiry"] > now and claim["expert_id"] != expert_id:
                raise Conflict(
                    f"candidate {candidate_id!r} is claimed by {claim['expert_id']!r}"
                )
            self.store.append(
                "candidate_claimed",
                {
                    "candidate_id": candidate_id,
                    "expert_id": expert_id,
                    "lease_expiry": now + lease_seconds,
                },
            )
            return self._entry_view(entry)

    def submit_refinement(self, candidate_id: str, expert_id: str, refined_text: str) -> dict:
        with self._write_lock:
            entry = self.store.state.entries.get(candidate_id)
            if entry is None:
                raise NotFound(f"unknown candidate {candidate_id!r}")
            claim = self.store.state.claims.get(candidate_id)
            now = self.clock()
            if claim is None or claim["lease_expiry"] <= now:
                raise Forbidden("candidate must be claimed before refinement")
            if claim["expert_id"] != expert_id:
                raise Forbidden(
                    f"candidate is claimed by {claim['expert_id']!r}, not {expert_id!r}"
                )
            if not refined_text:
                raise BadRequest("refined_text must be non-empty")
            if refined_text == entry["text"]:
                raise BadRequest("refined_text must differ from the original text")

            sample = self.pool.samples.get(entry["video_id"])
            candidate = self.pool.candidates.get(candidate_id)
            if sample is None or candidate is None:
                raise NotFound(f"candidate {candidate_id!r} missing from the pool")
            rescored = score_text(
                refined_text,
                sample,
                candidate.variant,
                self.scoring_config,
                self.lm,
                self.pos_lexicon,
            )
            event = RefinementEvent(
                event_id=self._next_event_id,
                candidate_id=candidate_id,
                expert_id=expert_id,
                original_text=entry["text"],
                refined_text=refined_text,
                timestamp=utc_now(),
                rescored=rescored,
            )
            self._next_event_id += 1
            self.store.append("refinement_submitted", event.to_dict())
            if self.orchestrator is not None:
                self.orchestrator.ingest_refinement(event)
            else:
                refined = candidate.advance(
                    CandidateStatus.REFINED, text=refined_text, score=rescored
                )
                self.pool.mark_accepted(refined.advance(CandidateStatus.ACCEPTED))
            previous = (entry.get("score") or {}).get("aggregate", 0.0)
            return {
                "event": event.to_dict(),
                "rescored": rescored.to_dict(),
                "previous_aggregate": previous,
                "delta": rescored.aggregate - previous,
                "below_threshold": rescored.aggregate < self.scoring_config.threshold,
            }


class ClaimBody(BaseModel):
    expert_id: str
    lease_seconds: float = DEFAULT_LEASE_SECONDS


class RefineBody(BaseModel):
    expert_id: str
    refined_text: str


def create_app(service: ReviewService, static_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="cotforge review service")

    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/queue")
    def queue(
        variant: Optional[str] = None,
        min_score: Optional[float] = None,
        max_score: Optional[float] = None,
        page: int = 1,
        page_size: int = 50,
    ):
        return service.list_queue(variant, min_score, max_score, page, page_size)

    @app.post("/queue/{candidate_id}/claim")
    def claim(candidate_id: str, body: ClaimBody):
        return service.claim(candidate_id, body.expert_id, body.lease_seconds)

    @app.post("/queue/{candidate_id}/refine")
    def refine(
        candidate_id: str,
        body: RefineBody,
        x_expert_id: Optional[str] = Header(default=None),
    ):
        expert = body.expert_id or x_expert_id or ""
        return service.submit_refinement(candidate_id, expert, body.refined_text)

    @app.get("/candidates/{candidate_id}")
    def candidate(candidate_id: str):
        return service.get_candidate(candidate_id)

    @app.get("/stats")
    def stats():
        return service.stats()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
