"""Append-only event log with checksums, snapshots and replay.

Review-service state is never stored directly: it is a pure fold over the
ordered event log. Each record carries a sha256 checksum so replay halts at
the first corrupted record instead of propagating bad state. Snapshots are
an optimization only; snapshot + tail replay must equal full replay.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional


def _canonical(seq: int, event_type: str, payload: dict) -> str:
    return json.dumps(
        {"seq": seq, "type": event_type, "payload": payload},
        ensure_ascii=False,
        separators=(",", ":"),
        sort_keys=True,
    )


def record_checksum(seq: int, event_type: str, payload: dict) -> str:
    return hashlib.sha256(_canonical(seq, event_type, payload).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EventRecord:
    seq: int
    type: str
    payload: dict

    def to_line(self) -> str:
        body = {
            "seq": self.seq,
            "type": self.type,
            "payload": self.payload,
            "checksum": record_checksum(self.seq, self.type, self.payload),
        }
        return json.dumps(body, ensure_ascii=False, separators=(",", ":"))


@dataclass
class CorruptionReport:
    line_number: int
    reason: str


@dataclass
class LogReadResult:
    records: list[EventRecord]
    corruption: Optional[CorruptionReport] = None


class EventLog:
    """Single-writer JSONL event log; every append is flushed to disk."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._next_seq = self._scan_next_seq()

    def _scan_next_seq(self) -> int:
        result = self.read()
        return result.records[-1].seq + 1 if result.records else 1

    def append(self, event_type: str, payload: dict) -> EventRecord:
        record = EventRecord(seq=self._next_seq, type=event_type, payload=payload)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(record.to_line() + "\n")
            fh.flush()
        self._next_seq += 1
        return record

    def read(self, from_seq: int = 1) -> LogReadResult:
        """Read and verify records; halt at the first corrupted one."""
        records: list[EventRecord] = []
        if not self.path.exists():
            return LogReadResult(records=records)
        with self.path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    body = json.loads(line)
                    expected = record_checksum(body["seq"], body["type"], body["payload"])
                    if body.get("checksum") != expected:
                        raise ValueError("checksum mismatch")
                except (ValueError, KeyError, TypeError) as exc:
                    return LogReadResult(
                        records=records,
                        corruption=CorruptionReport(line_number=lineno, reason=str(exc)),
                    )
                if body["seq"] >= from_seq:
                    records.append(
                        EventRecord(seq=body["seq"], type=body["type"], payload=body["payload"])
                    )
        return LogReadResult(records=records)


@dataclass
class ReviewState:
    """Pure fold of the review event log."""

    entries: dict[str, dict] = field(default_factory=dict)
    claims: dict[str, dict] = field(default_factory=dict)
    refinements: list[dict] = field(default_factory=list)
    per_expert: dict[str, int] = field(default_factory=dict)
    round_reports: list[dict] = field(default_factory=list)
    score_histogram: dict[str, int] = field(default_factory=dict)
    enqueued_total: int = 0
    removed_total: int = 0
    last_seq: int = 0

    def apply(self, record: EventRecord) -> None:
        payload = record.payload
        if record.type == "candidate_enqueued":
            cid = payload["candidate_id"]
            if cid not in self.entries:
                self.enqueued_total += 1
            self.entries[cid] = payload
        elif record.type == "candidate_claimed":
            self.claims[payload["candidate_id"]] = {
                "expert_id": payload["expert_id"],
                "lease_expiry": payload["lease_expiry"],
            }
        elif record.type == "refinement_submitted":
            cid = payload["candidate_id"]
            if cid in self.entries:
                self.removed_total += 1
            self.entries.pop(cid, None)
            self.claims.pop(cid, None)
            self.refinements.append(payload)
            expert = payload["expert_id"]
            self.per_expert[expert] = self.per_expert.get(expert, 0) + 1
        elif record.type == "entry_removed":
            cid = payload["candidate_id"]
            if cid in self.entries:
                self.removed_total += 1
            self.entries.pop(cid, None)
            self.claims.pop(cid, None)
        elif record.type == "round_completed":
            self.round_reports.append(payload)
            for bucket, count in payload.get("score_histogram", {}).items():
                self.score_histogram[bucket] = self.score_histogram.get(bucket, 0) + count
        self.last_seq = record.seq

    def to_dict(self) -> dict:
        return {
            "entries": {k: self.entries[k] for k in sorted(self.entries)},
            "claims": {k: self.claims[k] for k in sorted(self.claims)},
            "refinements": list(self.refinements),
            "per_expert": dict(sorted(self.per_expert.items())),
            "round_reports": list(self.round_reports),
            "score_histogram": dict(sorted(self.score_histogram.items())),
            "enqueued_total": self.enqueued_total,
            "removed_total": self.removed_total,
            "last_seq": self.last_seq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewState":
        state = cls(
            entries=dict(d.get("entries", {})),
            claims=dict(d.get("claims", {})),
            refinements=list(d.get("refinements", [])),
            per_expert=dict(d.get("per_expert", {})),
            round_reports=list(d.get("round_reports", [])),
            score_histogram=dict(d.get("score_histogram", {})),
            enqueued_total=d.get("enqueued_total", 0),
            removed_total=d.get("removed_total", 0),
            last_seq=d.get("last_seq", 0),
        )
        return state


class ReviewStore:
    """Event log plus periodic snapshots under one data directory."""

    def __init__(self, data_dir: str | Path, snapshot_interval: int = 100):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.snapshot_dir = self.data_dir / "snapshots"
        self.snapshot_dir.mkdir(exist_ok=True)
        self.log = EventLog(self.data_dir / "events.jsonl")
        self.snapshot_interval = snapshot_interval
        self.state = self.replay().state

    def append(self, event_type: str, payload: dict) -> EventRecord:
        record = self.log.append(event_type, payload)
        self.state.apply(record)
        if self.snapshot_interval and record.seq % self.snapshot_interval == 0:
            self.write_snapshot()
        return record

    def write_snapshot(self) -> Path:
        path = self.snapshot_dir / f"snapshot-{self.state.last_seq:012d}.json"
        path.write_text(
            json.dumps({"seq": self.state.last_seq, "state": self.state.to_dict()}),
            encoding="utf-8",
        )
        return path

    def latest_snapshot(self) -> Optional[tuple[int, dict]]:
        snapshots = sorted(self.snapshot_dir.glob("snapshot-*.json"))
        if not snapshots:
            return None
        body = json.loads(snapshots[-1].read_text(encoding="utf-8"))
        return body["seq"], body["state"]

    @dataclass
    class ReplayResult:
        state: "ReviewState"
        corruption: Optional[CorruptionReport] = None

    def replay(self) -> "ReviewStore.ReplayResult":
        """Full-log replay from scratch (ignores snapshots)."""
        state = ReviewState()
        result = self.log.read()
        for record in result.records:
            state.apply(record)
        return ReviewStore.ReplayResult(state=state, corruption=result.corruption)

    def replay_from_snapshot(self) -> "ReviewStore.ReplayResult":
        """Latest snapshot plus tail replay; equals full replay by construction."""
        snap = self.latest_snapshot()
        if snap is None:
            return self.replay()
        seq, state_dict = snap
        state = ReviewState.from_dict(state_dict)
        result = self.log.read(from_seq=seq + 1)
        for record in result.records:
            state.apply(record)
        return ReviewStore.ReplayResult(state=state, corruption=result.corruption)
