import json

import pytest

from cotforge.model import CandidateStatus, CandidateVariant, RefinementEvent, utc_now
from cotforge.orchestrator import (
    NothingToDo,
    Orchestrator,
    RefinementRejected,
    RoundReport,
    generate_candidate,
    histogram_bucket,
)
from cotforge.pool import AnnotationPool, InvalidSample
from cotforge.providers import (
    MockPromptGenerator,
    ProviderError,
    Providers,
    ReplayProviders,
    RecordingProviders,
    ScriptedCoTGenerator,
    TranscriptRecorder,
    TranscriptReplayer,
    candidate_id_for,
    mock_providers,
)
from cotforge.scoring import score_text
from cotforge.simulation import (
    ideal_rationale,
    make_scripted_expert,
    make_synthetic_pool,
    simulation_lm,
    simulation_scoring_config,
)
from conftest import build_sample


class TestPool:
    def test_add_sample_registers_pending_pairs(self, sample):
        pool = AnnotationPool()
        pool.add_sample(sample)
        assert pool.available_pending() == [("vid0001", "q1")]

    def test_invalid_sample_rejected(self):
        pool = AnnotationPool()
        with pytest.raises(InvalidSample):
            pool.add_sample(build_sample(video_id=""))

    def test_duplicate_video_id_rejected(self, sample):
        pool = AnnotationPool()
        pool.add_sample(sample)
        with pytest.raises(ValueError):
            pool.add_sample(sample)

    def test_queued_pairs_stay_pending_but_owned(self, sample):
        pool = AnnotationPool()
        pool.add_sample(sample)
        candidate = make_candidate(sample, "some draft", status=CandidateStatus.QUEUED_FOR_EXPERT)
        pool.mark_queued(candidate)
        assert ("vid0001", "q1") in pool.pending
        assert pool.available_pending() == []

    def test_accepting_clears_pending(self, sample):
        pool = AnnotationPool()
        pool.add_sample(sample)
        candidate = make_candidate(sample, "final text", status=CandidateStatus.ACCEPTED)
        pool.mark_accepted(candidate)
        assert pool.pending == set()
        assert pool.accepted_candidates() == [candidate]


def make_candidate(sample, text, status=CandidateStatus.GENERATED, round_no=1):
    from cotforge.model import CoTCandidate

    return CoTCandidate(
        candidate_id=candidate_id_for(sample.video_id, "q1", round_no, text),
        qa_id="q1",
        video_id=sample.video_id,
        text=text,
        variant=CandidateVariant.VIDEO_COT,
        status=status,
        round=round_no,
    )


class FlakyCoTGenerator:
    def __init__(self, failures, text="stub rationale."):
        self.failures = failures
        self.calls = 0
        self.text = text

    def generate(self, prompt):
        self.calls += 1
        if self.calls <= self.failures:
            raise ProviderError("transient failure")
        return self.text


class TestGenerateCandidate:
    def test_retry_then_success(self, sample):
        gen = FlakyCoTGenerator(failures=2)
        providers = Providers(MockPromptGenerator(), gen)
        candidate = generate_candidate(sample, sample.qa("q1"), providers, 1, retry_limit=3)
        assert gen.calls == 3
        assert candidate.text == "stub rationale."
        assert candidate.status is CandidateStatus.GENERATED

    def test_retries_exhausted_raises(self, sample):
        providers = Providers(MockPromptGenerator(), FlakyCoTGenerator(failures=5))
        with pytest.raises(ProviderError):
            generate_candidate(sample, sample.qa("q1"), providers, 1, retry_limit=3)

    def test_backoff_schedule_is_exponential(self, sample):
        waits = []
        providers = Providers(MockPromptGenerator(), FlakyCoTGenerator(failures=2))
        generate_candidate(
            sample,
            sample.qa("q1"),
            providers,
            1,
            retry_limit=3,
            backoff_base=0.5,
            sleep=waits.append,
        )
        assert waits == [0.5, 1.0]

    def test_topic_relevance_yields_topic_variant(self, topic_sample):
        providers = mock_providers()
        candidate = generate_candidate(topic_sample, topic_sample.qa("q1"), providers, 1)
        assert candidate.variant is CandidateVariant.TOPIC_COT

    def test_candidate_id_is_deterministic(self):
        a = candidate_id_for("v1", "q1", 2, "same text")
        b = candidate_id_for("v1", "q1", 2, "same text")
        c = candidate_id_for("v1", "q1", 3, "same text")
        assert a == b != c
        assert a.startswith("cand-")


def sim_orchestrator(n=12, batch_size=None, **kwargs):
    pool = make_synthetic_pool(n, seed=11)
    orch = Orchestrator(
        pool=pool,
        providers=mock_providers(seed=11),
        scoring_config=simulation_scoring_config(),
        lm=simulation_lm(pool),
        batch_size=batch_size,
        **kwargs,
    )
    return orch


class TestRunRound:
    def test_empty_pool_raises(self, config, seed_lm):
        orch = Orchestrator(
            pool=AnnotationPool(),
            providers=mock_providers(),
            scoring_config=config,
            lm=seed_lm,
        )
        with pytest.raises(NothingToDo):
            orch.run_round()

    def test_first_round_queues_low_quality_output(self):
        orch = sim_orchestrator(n=6)
        report = orch.run_round()
        assert report.round == 1
        assert report.generated == 6
        assert report.queued == 6
        assert report.accepted == 0
        assert report.mean_score < 0.5

    def test_batch_size_limits_round(self):
        orch = sim_orchestrator(n=6, batch_size=2)
        report = orch.run_round()
        assert report.generated == 2
        assert len(orch.pool.pending) == 6

    def test_failures_counted_and_pair_retryable(self, sample, config, seed_lm):
        pool = AnnotationPool()
        pool.add_sample(sample)
        providers = Providers(MockPromptGenerator(), FlakyCoTGenerator(failures=100))
        orch = Orchestrator(
            pool=pool, providers=providers, scoring_config=config, lm=seed_lm, retry_limit=2
        )
        report = orch.run_round()
        assert report.failed == 1
        assert report.generated == 0
        assert ("vid0001", "q1") in pool.failed
        assert orch.pool.available_pending() == [("vid0001", "q1")]

    def test_queue_callback_invoked(self):
        seen = []
        orch = sim_orchestrator(n=3)
        orch.on_queue = lambda cand, sample: seen.append((cand.candidate_id, sample.video_id))
        orch.run_round()
        assert len(seen) == 3

    def test_histogram_counts_sum_to_scored(self):
        orch = sim_orchestrator(n=6)
        report = orch.run_round()
        assert sum(report.score_histogram.values()) == report.generated

    def test_report_round_trip(self):
        report = sim_orchestrator(n=3).run_round()
        assert RoundReport.from_dict(json.loads(json.dumps(report.to_dict()))) == report


class TestHistogramBucket:
    @pytest.mark.parametrize(
        "score,bucket",
        [(0.0, "0.0-0.1"), (0.05, "0.0-0.1"), (0.1, "0.1-0.2"), (0.95, "0.9-1.0"), (1.0, "0.9-1.0")],
    )
    def test_buckets(self, score, bucket):
        assert histogram_bucket(score) == bucket


class TestIngestRefinement:
    def refine(self, orch, candidate):
        sample = orch.pool.samples[candidate.video_id]
        qa = sample.qa(candidate.qa_id)
        text = ideal_rationale(sample, qa)
        rescored = score_text(
            text, sample, candidate.variant, orch.scoring_config, orch.lm, orch.pos_lexicon
        )
        return RefinementEvent(
            event_id=orch.next_event_id(),
            candidate_id=candidate.candidate_id,
            expert_id="e1",
            original_text=candidate.text,
            refined_text=text,
            timestamp=utc_now(),
            rescored=rescored,
        )

    def test_refinement_accepts_and_records_training_pair(self):
        orch = sim_orchestrator(n=2, update_batch_size=10)
        orch.run_round()
        queued = [
            c for c in orch.pool.candidates.values()
            if c.status is CandidateStatus.QUEUED_FOR_EXPERT
        ]
        orch.ingest_refinement(self.refine(orch, queued[0]))
        updated = orch.pool.candidates[queued[0].candidate_id]
        assert updated.status is CandidateStatus.ACCEPTED
        assert len(orch.pool.training_pairs) == 1
        assert orch.pool.candidate_key(queued[0]) not in orch.pool.pending

    def test_update_flushes_at_batch_size(self):
        orch = sim_orchestrator(n=3, update_batch_size=2)
        orch.run_round()
        queued = sorted(
            (c for c in orch.pool.candidates.values()
             if c.status is CandidateStatus.QUEUED_FOR_EXPERT),
            key=lambda c: c.candidate_id,
        )
        level_before = orch.providers.prompt_generator.level
        orch.ingest_refinement(self.refine(orch, queued[0]))
        assert orch.providers.prompt_generator.level == level_before
        orch.ingest_refinement(self.refine(orch, queued[1]))
        assert orch.providers.prompt_generator.level == level_before + 1

    def test_unknown_candidate_rejected(self):
        orch = sim_orchestrator(n=1)
        orch.run_round()
        event = RefinementEvent(
            event_id=1,
            candidate_id="cand-doesnotexist",
            expert_id="e1",
            original_text="a",
            refined_text="b",
            timestamp=utc_now(),
            rescored=None,
        )
        with pytest.raises(RefinementRejected):
            orch.ingest_refinement(event)

    def test_non_queued_candidate_rejected(self):
        orch = sim_orchestrator(n=2)
        orch.run_round()
        queued = [
            c for c in orch.pool.candidates.values()
            if c.status is CandidateStatus.QUEUED_FOR_EXPERT
        ]
        orch.ingest_refinement(self.refine(orch, queued[0]))
        with pytest.raises(RefinementRejected):
            orch.ingest_refinement(self.refine(orch, queued[0]))


class TestRunUntilConverged:
    def test_machine_quality_improves_across_rounds(self):
        orch = sim_orchestrator(n=9, batch_size=3)
        expert = make_scripted_expert(orch)
        reports = orch.run_until_converged(max_rounds=10, refiner=expert)
        assert len(reports) == 3
        means = [r.mean_score for r in reports]
        assert means == sorted(means)
        assert reports[-1].accepted == reports[-1].generated
        assert orch.pool.pending == set()

    def test_all_samples_reach_terminal_state(self):
        orch = sim_orchestrator(n=9, batch_size=3)
        reports = orch.run_until_converged(max_rounds=10, refiner=make_scripted_expert(orch))
        total_accepted = len(orch.pool.accepted_candidates())
        assert total_accepted == 9
        assert sum(r.generated for r in reports) == 9

    def test_without_refiner_queued_work_stalls(self):
        orch = sim_orchestrator(n=4, batch_size=2)
        reports = orch.run_until_converged(max_rounds=10)
        # level-0 output all queues; nothing unqueues it without an expert
        assert orch.pool.pending != set()
        assert all(r.accepted == 0 for r in reports)

    def test_empty_pool_yields_single_empty_report(self, config, seed_lm):
        orch = Orchestrator(
            pool=AnnotationPool(),
            providers=mock_providers(),
            scoring_config=config,
            lm=seed_lm,
        )
        reports = orch.run_until_converged(max_rounds=5)
        assert len(reports) == 1
        assert reports[0].generated == 0


class TestTranscripts:
    def test_record_then_replay_matches(self, tmp_path, sample):
        path = tmp_path / "transcript.jsonl"
        recording = RecordingProviders(mock_providers(seed=3), TranscriptRecorder(path))
        live = generate_candidate(sample, sample.qa("q1"), recording.as_providers(), 1)

        replaying = ReplayProviders(TranscriptReplayer(path))
        replayed = generate_candidate(sample, sample.qa("q1"), replaying.as_providers(), 1)
        assert replayed.text == live.text
        assert replayed.candidate_id == live.candidate_id

    def test_replay_rejects_mismatched_request(self, tmp_path, sample):
        path = tmp_path / "transcript.jsonl"
        recording = RecordingProviders(mock_providers(seed=3), TranscriptRecorder(path))
        generate_candidate(sample, sample.qa("q1"), recording.as_providers(), 1)

        other = build_sample(video_id="vid0002", description="A cat sleeps on a mat.")
        replaying = ReplayProviders(TranscriptReplayer(path))
        with pytest.raises(ProviderError):
            generate_candidate(other, other.qa("q1"), replaying.as_providers(), 1, retry_limit=1)


class TestScriptedGenerator:
    def test_script_plays_in_order_then_exhausts(self):
        gen = ScriptedCoTGenerator(["first.", ProviderError("boom"), "third."])
        assert gen.generate("p") == "first."
        with pytest.raises(ProviderError):
            gen.generate("p")
        assert gen.generate("p") == "third."
        with pytest.raises(ProviderError):
            gen.generate("p")
