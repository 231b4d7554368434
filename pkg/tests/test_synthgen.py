import io

import numpy as np
import pytest

from argmoves.corpus import MoveLabel, QualityLevel, serialize_annotated, validate_annotated
from argmoves.segmenter import align_gold, segment_candidates
from argmoves.stats import COUNTED_LABELS, fit_random_intercept, move_ratios
from argmoves.synthgen import (
    DEFAULT_CUES,
    GeneratorConfig,
    SplitMix64,
    generate_corpus,
    parse_generator_config,
    separable_config,
)
from argmoves.verifier import merge_invalid


def serialize_to_bytes(corpus):
    buffer = io.StringIO()
    serialize_annotated(corpus, buffer)
    return buffer.getvalue().encode("utf-8")


class TestSplitMix64:
    def test_known_first_outputs(self):
        # SplitMix64 reference values for seed 1234567
        rng = SplitMix64(1234567)
        assert rng.next_u64() == 6457827717110365317
        assert rng.next_u64() == 3203168211198807973

    def test_uniform_range(self):
        rng = SplitMix64(9)
        for _ in range(1000):
            assert 0.0 <= rng.uniform() < 1.0

    def test_normal_moments(self):
        rng = SplitMix64(4)
        draws = np.array([rng.normal() for _ in range(20000)])
        assert abs(draws.mean()) < 0.03
        assert abs(draws.std() - 1.0) < 0.03


class TestGenerateCorpus:
    def test_counts_and_validity(self):
        corpus = generate_corpus(GeneratorConfig(learners=10, waves=12, seed=3))
        assert len(corpus) == 120
        assert all(validate_annotated(a) == [] for a in corpus)

    def test_same_seed_byte_identical(self):
        config = GeneratorConfig(learners=5, waves=4, seed=11)
        assert serialize_to_bytes(generate_corpus(config)) == serialize_to_bytes(
            generate_corpus(config)
        )

    def test_different_seed_differs(self):
        a = generate_corpus(GeneratorConfig(learners=5, waves=4, seed=1))
        b = generate_corpus(GeneratorConfig(learners=5, waves=4, seed=2))
        assert serialize_to_bytes(a) != serialize_to_bytes(b)

    def test_keystone_round_trip(self):
        config = GeneratorConfig(learners=8, waves=6, seed=5, internal_split_prob=0.4)
        for annotated in generate_corpus(config):
            candidates = segment_candidates(annotated.essay.text)
            labels = align_gold(candidates, list(annotated.moves))
            moves, _ = merge_invalid(candidates, labels)
            assert moves == list(annotated.moves)

    def test_cue_phrase_leads_each_content_move(self):
        config = separable_config(seed=2, learners=4, waves=3)
        for annotated in generate_corpus(config):
            for move in annotated.moves:
                if move.label is MoveLabel.TITLE:
                    continue
                text = move.span.slice(annotated.essay.text)
                cues = config.lexicon[move.label]
                assert any(text.startswith(c) for c in cues)

    def test_label_frequencies_within_three_binomial_se(self):
        config = GeneratorConfig(
            learners=40, waves=12, seed=7, trends={}, quality_shift={}, learner_sd=0.0,
            title_prob=0.0,
        )
        corpus = generate_corpus(config)
        labels = [m.label for a in corpus for m in a.moves]
        n = len(labels)
        assert n >= 5000
        for label, p in config.base_probs.items():
            se = (p * (1 - p) / n) ** 0.5
            observed = labels.count(label) / n
            assert abs(observed - p) <= 3 * se, (label, observed, p)

    def test_quality_shift_raises_counter_claims(self):
        corpus = generate_corpus(GeneratorConfig(learners=60, waves=6, seed=13))
        by_level = {}
        for a in corpus:
            by_level.setdefault(a.essay.quality_level, []).append(
                move_ratios(a).ratios[MoveLabel.COUNTER_CLAIM]
            )
        assert np.mean(by_level[QualityLevel.HIGH]) > np.mean(by_level[QualityLevel.LOW])

    def test_trend_slope_recovered(self):
        # +0.005/wave on the data probability = +0.5 percent-points per wave
        config = GeneratorConfig(
            learners=100,
            waves=12,
            seed=17,
            trends={MoveLabel.DATA: 0.005, MoveLabel.CLAIM: -0.005},
            quality_shift={},
            learner_sd=0.0,
        )
        corpus = generate_corpus(config)
        obs = [
            (a.essay.learner_id, a.essay.wave, move_ratios(a, "percent").ratios[MoveLabel.DATA])
            for a in corpus
        ]
        fit = fit_random_intercept(obs)
        assert abs(fit.beta1 - 0.5) <= 3 * fit.se_beta1
        # independent least-squares oracle on the pooled observations
        x = np.column_stack([np.ones(len(obs)), [o[1] for o in obs]])
        y = np.array([o[2] for o in obs])
        slope = np.linalg.lstsq(x, y, rcond=None)[0][1]
        assert fit.beta1 == pytest.approx(slope, abs=0.05)

    def test_every_essay_has_a_counted_move(self):
        config = GeneratorConfig(learners=10, waves=4, seed=23, moves_range=(1, 2))
        for a in generate_corpus(config):
            move_ratios(a)  # raises if no counted move

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            GeneratorConfig(learners=0)
        with pytest.raises(ValueError):
            GeneratorConfig(moves_range=(3, 2))
        with pytest.raises(ValueError):
            GeneratorConfig(base_probs={MoveLabel.CLAIM: 0.5})
        with pytest.raises(ValueError):
            GeneratorConfig(lexicon={MoveLabel.CLAIM: ()})


class TestConfigFile:
    def test_parse_round_trip_fields(self):
        text = """
        # generator settings
        seed = 42
        learners = 7
        waves = 3
        moves_min = 4
        moves_max = 9
        title_prob = 0.5
        internal_split_prob = 0.2
        learner_sd = 0
        quality_levels = false

        [base_probs]
        claim = 0.40
        data = 0.38
        counter_claim = 0.05
        counter_data = 0.02
        rebuttal_claim = 0.05
        rebuttal_data = 0.02
        non_argument = 0.08

        [trends]
        data = 0.003

        [lexicon]
        claim = I think|My position is
        """
        config = parse_generator_config(text)
        assert config.seed == 42
        assert config.learners == 7
        assert config.moves_range == (4, 9)
        assert config.quality_levels is False
        assert config.base_probs[MoveLabel.CLAIM] == 0.40
        assert config.trends == {MoveLabel.DATA: 0.003}
        assert config.lexicon[MoveLabel.CLAIM] == ("I think", "My position is")
        assert config.lexicon[MoveLabel.DATA] == DEFAULT_CUES[MoveLabel.DATA]

    def test_bad_line_reports_number(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_generator_config("seed = 1\nnot a kv pair\n")

    def test_generated_corpus_usable(self):
        config = parse_generator_config("seed = 1\nlearners = 2\nwaves = 2")
        assert len(generate_corpus(config)) == 4
