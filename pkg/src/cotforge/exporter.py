"""Deterministic dataset export: schemas, splits, manifests.

Accepted candidates are materialized into three dataset kinds (rationale
datasets for the video and topic variants, plus the yes/no topic-relevance
QA set), split at video granularity so no video leaks across splits, and
written as byte-reproducible JSONL with per-split checksums.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .model import CandidateVariant, QAKind, VideoSample, to_jsonl
from .pool import AnnotationPool

SPLITS = ("train", "val", "test")
DATASET_KINDS = ("video_cot", "topic_qa", "topic_cot")

TOPIC_QUESTION_TEMPLATE = "Is the video relevant to the topic '{topic}'?"


class ExportError(RuntimeError):
    pass


def split(
    video_ids: Sequence[str], ratios: Sequence[float], seed: int
) -> dict[str, str]:
    """Seeded partition of video ids into train/val/test.

    Sizes follow floor(n * ratio) per split with the remainder assigned to
    train, so the three splits always partition the input exactly.
    """
    if not video_ids:
        raise ValueError("video id list must be non-empty")
    if len(set(video_ids)) != len(video_ids):
        raise ValueError("video ids must be deduplicated")
    if len(ratios) != 3:
        raise ValueError("exactly three ratios required (train, val, test)")
    if any(r <= 0 for r in ratios) or abs(math.fsum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be positive and sum to 1")

    ids = sorted(video_ids)
    random.Random(seed).shuffle(ids)
    n = len(ids)
    counts = [math.floor(n * r) for r in ratios]
    counts[0] += n - sum(counts)  # remainder to train
    assignment: dict[str, str] = {}
    cursor = 0
    for name, count in zip(SPLITS, counts):
        for vid in ids[cursor : cursor + count]:
            assignment[vid] = name
        cursor += count
    return assignment


def build_topicqa(
    samples: Iterable[VideoSample],
    *,
    negative_ratio: float = 1.0,
    seed: int = 0,
) -> tuple[list[dict], list[str]]:
    """Yes/no relevance records per (video, topic) pair.

    Negative pairings are drawn by seeded sampling of other samples' topics
    at the configured ratio. Returns (records, warnings).
    """
    samples = list(samples)
    warnings: list[str] = []
    topics = sorted({s.topic.name for s in samples if s.topic is not None})
    rng = random.Random(seed)
    records: list[dict] = []
    for sample in sorted(samples, key=lambda s: s.video_id):
        if sample.topic is None:
            warnings.append(f"sample {sample.video_id!r} has no topic; skipped")
            continue
        answer = "yes"
        for qa in sample.qa_pairs:
            if qa.kind is QAKind.TOPIC_RELEVANCE:
                answer = qa.answer
                break
        records.append(
            {
                "video_id": sample.video_id,
                "question": TOPIC_QUESTION_TEMPLATE.format(topic=sample.topic.name),
                "answer": answer,
                "topic": sample.topic.name,
                "language": sample.language.value,
            }
        )
        foreign = [t for t in topics if t != sample.topic.name]
        n_negative = int(negative_ratio) + (1 if rng.random() < negative_ratio % 1 else 0)
        for _ in range(min(n_negative, len(foreign)) if foreign else 0):
            topic = rng.choice(foreign)
            records.append(
                {
                    "video_id": sample.video_id,
                    "question": TOPIC_QUESTION_TEMPLATE.format(topic=topic),
                    "answer": "no",
                    "topic": topic,
                    "language": sample.language.value,
                }
            )
    return records, warnings


def _rationale_records(pool: AnnotationPool, variant: CandidateVariant, dataset: str) -> list[dict]:
    offenders = [
        c.candidate_id
        for c in pool.candidates.values()
        if c.variant == variant and c.status.value != "accepted"
    ]
    if offenders:
        raise ExportError(
            f"pool contains non-accepted {dataset} candidates: {sorted(offenders)}"
        )
    records = []
    for candidate in pool.accepted_candidates(variant):
        sample = pool.samples[candidate.video_id]
        qa = sample.qa(candidate.qa_id)
        record: dict = {
            "dataset": dataset,
            "video_id": sample.video_id,
            "qa_id": qa.qa_id,
            "question": qa.question,
        }
        if qa.options:
            record["options"] = [list(o) for o in qa.options]
        record["answer"] = qa.answer
        record["rationale"] = candidate.text
        if dataset == "topic_cot" and sample.topic is not None:
            record["topic"] = sample.topic.name
        record["language"] = sample.language.value
        records.append(record)
    return records


def export(
    pool: AnnotationPool,
    dataset: str,
    destination: str | Path,
    *,
    ratios: Sequence[float] = (0.6, 0.2, 0.2),
    seed: int = 0,
    negative_ratio: float = 1.0,
) -> dict:
    """Write per-split JSONL files plus a checksum manifest.

    Records are sorted by (video_id, qa_id) and serialized with a stable
    field order, so exporting the same pool twice is byte-identical.
    """
    if dataset not in DATASET_KINDS:
        raise ExportError(f"unknown dataset kind {dataset!r}")

    warnings: list[str] = []
    if dataset == "video_cot":
        records = _rationale_records(pool, CandidateVariant.VIDEO_COT, dataset)
    elif dataset == "topic_cot":
        records = _rationale_records(pool, CandidateVariant.TOPIC_COT, dataset)
    else:
        records, warnings = build_topicqa(
            pool.samples.values(), negative_ratio=negative_ratio, seed=seed
        )
        for r in records:
            r["dataset"] = "topic_qa"

    video_ids = sorted({r["video_id"] for r in records})
    assignment = split(video_ids, ratios, seed) if video_ids else {}
    for record in records:
        record["split"] = assignment[record["video_id"]]
    records.sort(key=lambda r: (r["video_id"], r.get("qa_id", ""), r["question"]))

    out_dir = Path(destination) / dataset
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"dataset": dataset, "splits": {}, "total": len(records)}
    for split_name in SPLITS:
        split_records = [r for r in records if r["split"] == split_name]
        path = out_dir / f"{split_name}.jsonl"
        payload = "".join(to_jsonl(r) + "\n" for r in split_records)
        path.write_bytes(payload.encode("utf-8"))
        manifest["splits"][split_name] = {
            "count": len(split_records),
            "sha256": hashlib.sha256(payload.encode("utf-8")).hexdigest(),
        }
    if warnings:
        manifest["warnings"] = warnings
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return manifest
