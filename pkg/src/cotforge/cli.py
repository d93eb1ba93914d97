"""Single command-line entry point binding all pipeline modules.

Subcommands: ingest, run, serve, score, export, eval, analyze, replay.
Data outputs go to stdout or files; structured JSON-lines logs go to
stderr. Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import evalharness, exporter, lexical, simulation
from .events import ReviewStore
from .model import CoTCandidate, VideoSample, to_jsonl, validate_sample
from .orchestrator import Orchestrator
from .pool import AnnotationPool
from .providers import (
    RecordingProviders,
    ReplayProviders,
    TranscriptRecorder,
    TranscriptReplayer,
    mock_providers,
)
from .scoring import ScoringConfig, score_candidate

CONFIG_ENV = "COTFORGE_CONFIG"
DEFAULT_CONFIG_PATH = "./cotforge.config"


def log(level: str, message: str, **fields) -> None:
    print(
        json.dumps({"level": level, "message": message, **fields}, ensure_ascii=False),
        file=sys.stderr,
    )


def _load_scoring_config(path: Optional[str]) -> ScoringConfig:
    # discovery order: flag > env > ./cotforge.config > built-in defaults
    candidate = path or os.environ.get(CONFIG_ENV)
    if candidate is None and Path(DEFAULT_CONFIG_PATH).exists():
        candidate = DEFAULT_CONFIG_PATH
    if candidate is None:
        return ScoringConfig.default()
    return ScoringConfig.from_file(candidate)


def _read_jsonl(path: Path):
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if line.strip():
            yield lineno, json.loads(line)


def _pool_path(data_dir: str) -> Path:
    return Path(data_dir) / "pool.jsonl"


def _load_pool(data_dir: str) -> AnnotationPool:
    pool = AnnotationPool()
    path = _pool_path(data_dir)
    if path.exists():
        for _, record in _read_jsonl(path):
            pool.add_sample(VideoSample.from_dict(record))
    return pool


def cmd_ingest(args) -> int:
    Path(args.data_dir).mkdir(parents=True, exist_ok=True)
    pool = _load_pool(args.data_dir)
    summary = {"files": {}, "ingested": 0, "rejected": 0}
    new_samples: list[VideoSample] = []
    for path_str in args.paths:
        path = Path(path_str)
        accepted = rejected = 0
        if not path.exists():
            log("error", "unreadable file", path=str(path))
            summary["files"][str(path)] = {"error": "not found"}
            continue
        for lineno, record in _read_jsonl(path):
            try:
                sample = VideoSample.from_dict(record)
            except (KeyError, ValueError) as exc:
                rejected += 1
                log("warning", "unparseable line", path=str(path), line=lineno, reason=str(exc))
                continue
            violations = validate_sample(sample)
            if violations or sample.video_id in pool.samples:
                rejected += 1
                reason = violations or ["duplicate video_id"]
                log("warning", "rejected sample", path=str(path), line=lineno, violations=reason)
                continue
            pool.add_sample(sample)
            new_samples.append(sample)
            accepted += 1
        summary["files"][str(path)] = {"accepted": accepted, "rejected": rejected}
        summary["ingested"] += accepted
        summary["rejected"] += rejected
    with _pool_path(args.data_dir).open("a", encoding="utf-8") as fh:
        for sample in new_samples:
            fh.write(to_jsonl(sample) + "\n")
    summary["pool_size"] = len(pool.samples)
    print(json.dumps(summary, ensure_ascii=False))
    return 0 if summary["ingested"] > 0 or not args.paths else (0 if summary["ingested"] else 1)


def _build_providers(args):
    if getattr(args, "replay_transcript", None):
        return ReplayProviders(TranscriptReplayer(args.replay_transcript)).as_providers()
    providers = mock_providers(seed=args.seed)
    if getattr(args, "transcript", None):
        return RecordingProviders(providers, TranscriptRecorder(args.transcript)).as_providers()
    return providers


def cmd_run(args) -> int:
    pool = _load_pool(args.data_dir)
    if not pool.samples:
        log("error", "empty pool; ingest samples first", data_dir=args.data_dir)
        return 1
    config = _load_scoring_config(args.config)
    if args.threshold is not None:
        config = ScoringConfig.from_dict({**config.to_dict(), "threshold": args.threshold})
    lm = lexical.load_seed_model()
    providers = _build_providers(args)
    store = ReviewStore(Path(args.data_dir) / "review")
    orchestrator = Orchestrator(
        pool=pool,
        providers=providers,
        scoring_config=config,
        lm=lm,
        batch_size=args.batch_size,
        update_batch_size=10**9,  # per-round cadence
    )
    from .service import ReviewService

    service = ReviewService(store, pool, config, lm, orchestrator=orchestrator)
    orchestrator.on_queue = service.enqueue_candidate

    refiner = None
    if args.auto_refine:
        ideal_refiner = simulation.make_scripted_expert(orchestrator)

        def refiner(candidate, sample):
            # route through the service so the event log records the edit
            event = ideal_refiner(candidate, sample)
            service.claim(candidate.candidate_id, event.expert_id, 3600.0)
            service.submit_refinement(
                candidate.candidate_id, event.expert_id, event.refined_text
            )
            return None

    reports = orchestrator.run_until_converged(args.rounds, refiner=refiner)
    for report in reports:
        service.record_round(report)
        print(json.dumps(report.to_dict(), ensure_ascii=False))
    candidates_path = Path(args.data_dir) / "candidates.jsonl"
    with candidates_path.open("w", encoding="utf-8") as fh:
        for cid in sorted(pool.candidates):
            fh.write(to_jsonl(pool.candidates[cid]) + "\n")
    log("info", "run complete", rounds=len(reports), candidates=len(pool.candidates))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ReviewService, create_app

    pool = _load_pool(args.data_dir)
    candidates_path = Path(args.data_dir) / "candidates.jsonl"
    if candidates_path.exists():
        for _, record in _read_jsonl(candidates_path):
            candidate = CoTCandidate.from_dict(record)
            pool.candidates[candidate.candidate_id] = candidate
    config = _load_scoring_config(args.config)
    lm = lexical.load_seed_model()
    store = ReviewStore(Path(args.data_dir) / "review", snapshot_interval=args.snapshot_interval)
    service = ReviewService(store, pool, config, lm)
    app = create_app(service, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_score(args) -> int:
    pool = _load_pool(args.data_dir)
    config = _load_scoring_config(args.config)
    lm = lexical.load_seed_model()
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for _, record in _read_jsonl(Path(args.candidates)):
            candidate = CoTCandidate.from_dict(record)
            sample = pool.samples.get(candidate.video_id)
            if sample is None:
                log("warning", "no sample for candidate", candidate_id=candidate.candidate_id)
                continue
            quality = score_candidate(candidate, sample, config, lm)
            out.write(
                to_jsonl({"candidate_id": candidate.candidate_id, **quality.to_dict()}) + "\n"
            )
    finally:
        if args.out:
            out.close()
    return 0


def cmd_export(args) -> int:
    pool = _load_pool(args.data_dir)
    candidates_path = Path(args.data_dir) / "candidates.jsonl"
    if candidates_path.exists():
        for _, record in _read_jsonl(candidates_path):
            candidate = CoTCandidate.from_dict(record)
            pool.candidates[candidate.candidate_id] = candidate
    manifest = exporter.export(
        pool,
        args.dataset,
        args.out,
        ratios=tuple(args.ratios),
        seed=args.seed,
    )
    print(json.dumps(manifest, ensure_ascii=False, sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    records = evalharness.load_eval_records(args.records)
    if args.metric == "mc":
        report = evalharness.acc_mc(records).to_dict()
    elif args.metric == "keywords":
        report = {"accuracy": evalharness.acc_oe_keywords(records), "total": len(records)}
    else:
        if not args.judge_transcript:
            log("error", "--judge-transcript required for the judge metric")
            return 1
        judge = evalharness.ReplayJudge(TranscriptReplayer(args.judge_transcript))
        report = evalharness.acc_oe_judge(records, judge).to_dict()
    print(json.dumps({"metric": args.metric, **report}, ensure_ascii=False))
    return 0


def cmd_analyze(args) -> int:
    texts = [line for line in Path(args.texts).read_text(encoding="utf-8").splitlines() if line.strip()]
    if args.what == "length":
        result = {
            "length_distribution": evalharness.length_distribution(texts, args.bucket_width)
        }
    else:
        result = {
            "top_words": {
                category: evalharness.top_words(texts, category, args.k)
                for category in ("noun", "verb", "conjunction")
            }
        }
    print(json.dumps(result, ensure_ascii=False))
    return 0


def cmd_replay(args) -> int:
    store = ReviewStore(Path(args.data_dir) / "review")
    full = store.replay()
    from_snapshot = store.replay_from_snapshot()
    report = {
        "last_seq": full.state.last_seq,
        "queue_depth": len(full.state.entries),
        "refinements": len(full.state.refinements),
        "snapshot_matches_full": full.state.to_dict() == from_snapshot.state.to_dict(),
    }
    if full.corruption:
        report["corruption"] = {
            "line_number": full.corruption.line_number,
            "reason": full.corruption.reason,
        }
    print(json.dumps(report, ensure_ascii=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cotforge",
        description="Human-in-the-loop annotation pipeline for video CoT datasets",
    )
    parser.add_argument("--data-dir", default="./cotforge-data", help="pipeline state directory")
    parser.add_argument("--config", default=None, help="scoring config JSON path")
    parser.add_argument("--seed", type=int, default=0, help="seed for all randomized behavior")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and add sample JSONL files to the pool")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("run", help="run generation/scoring/routing rounds")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--transcript", default=None, help="record provider transcript here")
    p.add_argument("--replay-transcript", default=None, help="replay providers from transcript")
    p.add_argument("--auto-refine", action="store_true", help="use the scripted expert")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="start the review HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--static-dir", default=None, help="built review UI bundle")
    p.add_argument("--snapshot-interval", type=int, default=100)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("score", help="score candidate JSONL against the pool's grounding")
    p.add_argument("--candidates", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("export", help="materialize datasets with deterministic splits")
    p.add_argument("--dataset", required=True, choices=exporter.DATASET_KINDS)
    p.add_argument("--ratios", type=float, nargs=3, default=[0.6, 0.2, 0.2])
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out", default="./export")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("eval", help="compute accuracy metrics over eval records")
    p.add_argument("--metric", required=True, choices=["mc", "keywords", "judge"])
    p.add_argument("--records", required=True)
    p.add_argument("--judge-transcript", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="length distribution and top-word analyses")
    p.add_argument("--texts", required=True, help="one text per line")
    p.add_argument("--what", choices=["length", "topwords"], default="length")
    p.add_argument("--bucket-width", type=int, default=10)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("replay", help="rebuild review state from the event log")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # operational errors exit 1
        log("error", str(exc), type=type(exc).__name__)
        return 1


if __name__ == "__main__":
    sys.exit(main())
