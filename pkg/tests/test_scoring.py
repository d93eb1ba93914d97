import math

import pytest
from hypothesis import given, strategies as st

from cotforge.lexical import NGramModel, match_mentions
from cotforge.model import CandidateVariant, GroundingAnnotation, TermEntry, TopicItem
from cotforge.scoring import (
    DEFAULT_THRESHOLD,
    DEFAULT_TOPIC_WEIGHTS,
    DEFAULT_VIDEO_WEIGHTS,
    RoutingDecision,
    ScoringConfig,
    aggregate,
    route,
    score_background,
    score_concept,
    score_perplexity_dim,
    score_relations,
    score_spatial,
    score_summary,
    score_temporal,
    score_text,
)
from conftest import build_sample


class TestScoringConfig:
    def test_defaults(self, config):
        assert config.video_weights == DEFAULT_VIDEO_WEIGHTS
        assert config.topic_weights == DEFAULT_TOPIC_WEIGHTS
        assert config.threshold == DEFAULT_THRESHOLD
        assert "therefore" in config.summary_patterns

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ScoringConfig(video_weights=(0.2, 0.1, 0.3, 0.3, 0.1, 0.1))

    def test_weight_arity_enforced(self):
        with pytest.raises(ValueError):
            ScoringConfig(video_weights=(0.5, 0.5))

    def test_threshold_bounds(self):
        with pytest.raises(ValueError):
            ScoringConfig(threshold=1.5)

    def test_file_round_trip(self, config, tmp_path):
        path = tmp_path / "scoring.json"
        config.to_file(path)
        assert ScoringConfig.from_file(path) == config


class TestFluencyDimension:
    def test_uniform_model_gives_exact_value(self):
        model = NGramModel.uniform([f"w{i}" for i in range(49)])
        assert score_perplexity_dim("w0 w1 w2 w3", model) == 0.02

    def test_calibrated_mode_caps_at_one(self):
        model = NGramModel.uniform([f"w{i}" for i in range(49)])
        config = ScoringConfig(ppl_reference=100.0)
        # PPL = 50, so 100/50 = 2 caps to 1
        assert score_perplexity_dim("w0 w1 w2 w3", model, config) == 1.0

    def test_calibrated_mode_below_reference(self):
        model = NGramModel.uniform([f"w{i}" for i in range(49)])
        config = ScoringConfig(ppl_reference=25.0)
        assert score_perplexity_dim("w0 w1 w2 w3", model, config) == pytest.approx(
            0.5, rel=1e-12
        )

    def test_empty_text_rejected(self, seed_lm):
        with pytest.raises(ValueError):
            score_perplexity_dim("", seed_lm)


class TestDiscreteDimensions:
    def test_background_pattern_hit_and_miss(self, config):
        assert score_background("The video scene is shown here.", config.background_patterns) == 1
        assert score_background("The girl runs.", config.background_patterns) == 0

    def test_relation_pattern_hit_and_miss(self, config):
        assert score_relations("The dog sits next to the girl.", config.relation_patterns) == 1
        assert score_relations("The dog sits.", config.relation_patterns) == 0

    def test_summary_marker_must_be_in_final_two_sentences(self, config):
        tail = "Therefore, the answer is B."
        assert score_summary(f"The girl runs. {tail}", config.summary_patterns) == 1
        early = f"{tail} She runs. She jumps. She stops."
        assert score_summary(early, config.summary_patterns) == 0

    def test_concept_matches_topic_name_or_terms(self):
        topic = TopicItem(name="hurdling", concept_terms=("track and field",))
        assert score_concept("This is clearly hurdling.", topic) == 1
        assert score_concept("A track and field event.", topic) == 1
        assert score_concept("People moving around.", topic) == 0

    def test_concept_requires_topic(self):
        with pytest.raises(ValueError):
            score_concept("anything", None)


def grounding(n_objects, n_actions):
    return GroundingAnnotation(
        objects=tuple(TermEntry(term=f"obj{i}") for i in range(n_objects)),
        actions=tuple(TermEntry(term=f"act{i}") for i in range(n_actions)),
    )


class TestCoverageDimensions:
    def test_spatial_formula(self, lexicon):
        g = grounding(4, 0)
        report = match_mentions("obj0 and obj1 appear with a unicorn", g, lexicon)
        score = score_spatial(report, g)
        assert score.raw == pytest.approx((2 - 1) / 4)
        assert score.clamped == score.raw

    def test_negative_raw_clamps_to_zero(self, lexicon):
        g = grounding(2, 0)
        report = match_mentions("a unicorn and a dog and a cat", g, lexicon)
        score = score_spatial(report, g)
        assert score.raw == pytest.approx(-1.5)
        assert score.clamped == 0.0

    def test_clamp_can_be_disabled(self, lexicon):
        g = grounding(2, 0)
        report = match_mentions("a unicorn and a dog and a cat", g, lexicon)
        assert score_spatial(report, g, clamp=False).clamped == pytest.approx(-1.5)

    def test_temporal_formula(self, lexicon):
        g = GroundingAnnotation(actions=(TermEntry(term="run"), TermEntry(term="jump")))
        report = match_mentions("she runs and swims", g, lexicon)
        score = score_temporal(report, g)
        assert score.raw == pytest.approx((1 - 1) / 2)

    def test_empty_denominator_is_degenerate_zero(self, lexicon):
        g = grounding(0, 0)
        report = match_mentions("a unicorn", g, lexicon)
        score = score_spatial(report, g)
        assert score.degenerate
        assert score.clamped == 0.0


class TestAggregate:
    def test_video_weighting(self, config):
        dims = (1.0, 1.0, 0.5, 0.5, 1.0, 1.0)
        assert aggregate(dims, CandidateVariant.VIDEO_COT, config) == pytest.approx(
            0.7, abs=1e-12
        )

    def test_topic_weighting(self, config):
        dims = (1.0, 1.0, 1.0, 0.0, 1.0)
        # all weight except the 0.4 concept slot
        assert aggregate(dims, CandidateVariant.TOPIC_COT, config) == pytest.approx(
            0.6, abs=1e-12
        )

    def test_arity_mismatch_rejected(self, config):
        with pytest.raises(ValueError):
            aggregate((1.0, 1.0), CandidateVariant.VIDEO_COT, config)

    @given(
        dims=st.lists(
            st.floats(min_value=0, max_value=1, allow_nan=False), min_size=6, max_size=6
        )
    )
    def test_result_bounded_by_extreme_dimensions(self, config, dims):
        agg = aggregate(dims, CandidateVariant.VIDEO_COT, config)
        assert min(dims) - 1e-12 <= agg <= max(dims) + 1e-12


class TestRoute:
    def test_below_threshold_goes_to_experts(self, config):
        assert route(0.07, config) is RoutingDecision.EXPERT_QUEUE

    def test_above_threshold_accepted(self, config):
        assert route(0.97, config) is RoutingDecision.ACCEPT

    def test_boundary_is_accepted(self, config):
        assert route(0.90, config) is RoutingDecision.ACCEPT

    def test_out_of_range_rejected(self, config):
        with pytest.raises(ValueError):
            route(1.2, config)
        with pytest.raises(ValueError):
            route(-0.1, config)


class TestScoreText:
    IDEAL = (
        "The video scene is shown here. The girl runs on the bitumen road. "
        "While this happens, everything stays next to each other. "
        "Therefore, the answer is B."
    )

    def test_full_composition_oracle(self, sample, config, seed_lm, lexicon):
        score = score_text(self.IDEAL, sample, CandidateVariant.VIDEO_COT, config, seed_lm, lexicon)
        report = match_mentions(self.IDEAL, sample.grounding, lexicon)
        expected_dims = (
            score_perplexity_dim(self.IDEAL, seed_lm, config),
            float(score_background(self.IDEAL, config.background_patterns)),
            score_temporal(report, sample.grounding).clamped,
            score_spatial(report, sample.grounding).clamped,
            float(score_relations(self.IDEAL, config.relation_patterns)),
            float(score_summary(self.IDEAL, config.summary_patterns)),
        )
        assert (score.ppl, score.bac, score.tem, score.spa, score.rel, score.sum) == expected_dims
        assert score.aggregate == pytest.approx(
            math.fsum(w * d for w, d in zip(config.video_weights, expected_dims)), abs=1e-12
        )
        assert score.mention_report == report

    def test_discrete_dims_all_hit_for_ideal_text(self, sample, config, seed_lm, lexicon):
        score = score_text(self.IDEAL, sample, CandidateVariant.VIDEO_COT, config, seed_lm, lexicon)
        assert (score.bac, score.rel, score.sum) == (1.0, 1.0, 1.0)
        assert score.spa == 1.0
        assert score.tem == 1.0

    def test_topic_variant(self, topic_sample, config, seed_lm, lexicon):
        text = "The runner clears hurdles. Therefore, the answer is yes to hurdling."
        score = score_text(text, topic_sample, CandidateVariant.TOPIC_COT, config, seed_lm, lexicon)
        assert score.con == 1.0
        assert score.bac is None
        assert score.rel is None

    def test_topic_variant_requires_topic(self, sample, config, seed_lm, lexicon):
        with pytest.raises(ValueError):
            score_text("text here", sample, CandidateVariant.TOPIC_COT, config, seed_lm, lexicon)

    def test_degenerate_grounding_is_diagnosed(self, config, seed_lm, lexicon):
        bare = build_sample(objects=(), actions=())
        score = score_text("The girl runs.", bare, CandidateVariant.VIDEO_COT, config, seed_lm, lexicon)
        assert score.spa == 0.0
        assert score.tem == 0.0
        assert any("object" in d for d in score.diagnostics)
        assert any("action" in d for d in score.diagnostics)
