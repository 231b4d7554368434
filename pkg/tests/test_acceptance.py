"""Acceptance suite: one test per acceptance criterion, each printing a
PASS line (run with `pytest tests/test_acceptance.py -v -s`). Tolerances
are pinned here and nowhere else.
"""
import math
import time

import numpy as np
import pytest

from argmoves import cli
from argmoves.corpus import (
    CandidateLabel,
    MoveLabel,
    QualityLevel,
    parse_corpus,
    serialize_annotated,
    serialize_essays,
)
from argmoves.evaluation import (
    EvalReport,
    MatchCounts,
    evaluate_candidate_labels,
    match_moves,
    prf,
    round_half_up,
)
from argmoves.corpus import AnnotatedMove, Span
from argmoves.labeler import BaselineBackend, TrainConfig, build_context, predict_labels, train_baseline
from argmoves.segmenter import align_gold, segment_candidates
from argmoves.stats import (
    bonferroni,
    fit_random_intercept,
    manova_wilks,
    move_ratios,
    one_way_anova,
)
from argmoves.synthgen import (
    GeneratorConfig,
    effect_config,
    generate_corpus,
    null_config,
    separable_config,
)
from argmoves.verifier import merge_invalid


def _pass(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


def test_keystone_round_trip():
    """segment -> align_gold -> merge_invalid reproduces gold on 1,000 essays."""
    config = GeneratorConfig(learners=100, waves=10, seed=1001, internal_split_prob=0.3)
    corpus = generate_corpus(config)
    assert len(corpus) == 1000
    started = time.monotonic()
    mismatches = 0
    for annotated in corpus:
        candidates = segment_candidates(annotated.essay.text)
        labels = align_gold(candidates, list(annotated.moves))
        moves, _ = merge_invalid(candidates, labels)
        if moves != list(annotated.moves):
            mismatches += 1
    elapsed = time.monotonic() - started
    assert mismatches == 0
    assert elapsed < 5.0, f"keystone took {elapsed:.2f}s"
    _pass(f"keystone-round-trip (1000 essays, {elapsed:.2f}s)")


def _counts_for_rates(precision_pct: int, recall_pct: int) -> MatchCounts:
    tp = precision_pct * recall_pct
    counts = MatchCounts()
    counts.tp[CandidateLabel.DATA] = tp
    counts.fp[CandidateLabel.DATA] = recall_pct * 100 - tp
    counts.fn[CandidateLabel.DATA] = precision_pct * 100 - tp
    return counts


def test_f1_formula_reference_rates():
    """P=.73/R=.79 -> F1 .76 and P=.75/R=.72 -> F1 .73 at 2 d.p."""
    data_row = prf(_counts_for_rates(73, 79)).total
    assert (data_row.precision, data_row.recall) == (0.73, 0.79)
    assert round_half_up(data_row.f1, 2) == 0.76
    claim_row = prf(_counts_for_rates(75, 72)).total
    assert (claim_row.precision, claim_row.recall) == (0.75, 0.72)
    assert round_half_up(claim_row.f1, 2) == 0.73
    _pass("f1-formula (0.73/0.79->0.76, 0.75/0.72->0.73)")


def _random_partition(rng, n_chars, labels):
    n_cuts = int(rng.integers(0, 8))
    cuts = sorted(set(rng.integers(1, n_chars, size=n_cuts).tolist())) + [n_chars]
    moves, start = [], 0
    for end in cuts:
        moves.append(AnnotatedMove(Span(start, end), labels[int(rng.integers(0, len(labels)))]))
        start = end
    return moves


def test_evaluation_oracle_equivalence():
    """match_moves / evaluate_candidate_labels equal brute-force tallies on
    200 random partitions (exact integer counts)."""
    rng = np.random.default_rng(77)
    labels = list(MoveLabel)
    for _ in range(200):
        n = int(rng.integers(4, 40))
        gold = _random_partition(rng, n, labels)
        pred = _random_partition(rng, n, labels)
        counts = match_moves(pred, gold)
        # brute force over all span pairs
        tp, fp, fn = {}, {}, {}
        for p in pred:
            hit = any(p.span == g.span and p.label is g.label for g in gold)
            key = CandidateLabel(p.label.value)
            (tp if hit else fp).setdefault(key, 0)
            (tp if hit else fp)[key] += 1
        for g in gold:
            if not any(p.span == g.span and p.label is g.label for p in pred):
                key = CandidateLabel(g.label.value)
                fn[key] = fn.get(key, 0) + 1
        assert counts.tp == tp and counts.fp == fp and counts.fn == fn

        m = int(rng.integers(1, 60))
        seq_a = [CandidateLabel(labels[i].value) for i in rng.integers(0, len(labels), size=m)]
        seq_b = [CandidateLabel(labels[i].value) for i in rng.integers(0, len(labels), size=m)]
        cand_counts = evaluate_candidate_labels(seq_a, seq_b)
        for label in CandidateLabel:
            assert cand_counts.tp.get(label, 0) == sum(
                1 for a, b in zip(seq_a, seq_b) if a is b is label
            )
            assert cand_counts.fp.get(label, 0) == sum(
                1 for a, b in zip(seq_a, seq_b) if a is label is not b and a is not b
            )
            assert cand_counts.fn.get(label, 0) == sum(
                1 for a, b in zip(seq_a, seq_b) if b is label and a is not b
            )
    _pass("evaluation-oracle-equivalence (200 partitions)")


def test_end_to_end_identity_via_cli(tmp_path):
    """Oracle backend through the full CLI annotate+evaluate -> Total F1 = 1.00."""
    gold = tmp_path / "gold.jsonl"
    essays = tmp_path / "essays.jsonl"
    pred = tmp_path / "pred.jsonl"
    report_path = tmp_path / "report.tsv"
    corpus = generate_corpus(GeneratorConfig(learners=10, waves=6, seed=55, internal_split_prob=0.25))
    with open(gold, "w", encoding="utf-8") as fh:
        serialize_annotated(corpus, fh)
    with open(essays, "w", encoding="utf-8") as fh:
        serialize_essays([a.essay for a in corpus], fh)
    assert cli.run(["annotate", "--input", str(essays), "--out", str(pred),
                    "--oracle-gold", str(gold)]) == 0
    assert cli.run(["evaluate", "--pred", str(pred), "--gold", str(gold),
                    "--format", "tsv", "--out", str(report_path)]) == 0
    report = EvalReport.from_tsv(report_path.read_text())
    assert report.total.f1 == 1.0
    assert report.total.precision == 1.0 and report.total.recall == 1.0
    _pass("end-to-end-identity (Total F1 = 1.00)")


def test_baseline_learnability():
    """Candidate-label micro-F1 >= 0.95 on a held-out split of the separable corpus."""
    started = time.monotonic()
    config = separable_config(seed=2024, learners=40, waves=6)
    corpus = generate_corpus(config)
    split_at = int(len(corpus) * 0.8)
    rng = np.random.default_rng(0)
    order = rng.permutation(len(corpus))
    train_set = [corpus[i] for i in order[:split_at]]
    heldout = [corpus[i] for i in order[split_at:]]

    lexicon = tuple(cues[0] for cues in config.lexicon.values())
    pairs = []
    for annotated in train_set:
        candidates = segment_candidates(annotated.essay.text)
        labels = align_gold(candidates, list(annotated.moves))
        pairs.append((annotated.essay, candidates, labels))
    model = train_baseline(pairs, TrainConfig(epochs=400, learning_rate=0.3), lexicon=lexicon)
    backend = BaselineBackend(model)

    counts = MatchCounts()
    for annotated in heldout:
        candidates = segment_candidates(annotated.essay.text)
        gold_labels = align_gold(candidates, list(annotated.moves))
        context = build_context(annotated.essay, candidates)
        predicted = predict_labels(backend.classify_context(context))
        counts.add(evaluate_candidate_labels(predicted, gold_labels))
    micro_f1 = prf(counts).total.f1
    elapsed = time.monotonic() - started
    assert micro_f1 >= 0.95, f"micro-F1 {micro_f1:.4f}"
    assert elapsed < 60.0, f"learnability took {elapsed:.1f}s"
    _pass(f"baseline-learnability (micro-F1 {micro_f1:.3f}, {elapsed:.1f}s)")


def _simulate_balanced(m, w, beta0, beta1, sd_u, sd_e, seed):
    rng = np.random.default_rng(seed)
    obs = []
    for i in range(m):
        u = rng.normal(0, sd_u) if sd_u > 0 else 0.0
        for wave in range(1, w + 1):
            obs.append((f"I{i:03d}", wave, beta0 + beta1 * wave + u + rng.normal(0, sd_e)))
    return obs


def _balanced_closed_form(obs, m, w):
    y = np.array([o[2] for o in obs])
    x = np.column_stack([np.ones(len(obs)), [o[1] for o in obs]])
    ids = {k: i for i, k in enumerate(dict.fromkeys(o[0] for o in obs))}
    idx = np.array([ids[o[0]] for o in obs])
    beta = np.linalg.lstsq(x, y, rcond=None)[0]
    residuals = y - x @ beta
    rbar = np.array([residuals[idx == i].mean() for i in range(m)])
    ssb = w * (rbar**2).sum()
    ssw = ((residuals - rbar[idx]) ** 2).sum()
    n = len(obs)
    c_star = (ssb / m) / (ssw / (n - m))
    if c_star < 1.0:
        return beta, (ssw + ssb) / n, 0.0
    s2e = ssw / (n - m)
    return beta, s2e, (ssb / m - s2e) / w


def test_mixed_model_oracle():
    """ML fit matches the balanced closed form within 1e-6; beta1 within
    3 SE of 1.3; sigma_u = 0 data reproduces OLS within 1e-6."""
    obs = _simulate_balanced(100, 12, 50.0, 1.3, 2.0, 3.0, seed=42)
    fit = fit_random_intercept(obs)
    beta, s2e, s2u = _balanced_closed_form(obs, 100, 12)
    assert abs(fit.beta0 - beta[0]) < 1e-6
    assert abs(fit.beta1 - beta[1]) < 1e-6
    assert abs(fit.var_within - s2e) < 1e-6
    assert abs(fit.var_between - s2u) < 1e-6
    assert abs(fit.beta1 - 1.3) <= 3 * fit.se_beta1

    obs0 = _simulate_balanced(100, 12, 50.0, 1.3, 0.0, 3.0, seed=43)
    fit0 = fit_random_intercept(obs0)
    y = np.array([o[2] for o in obs0])
    x = np.column_stack([np.ones(len(obs0)), [o[1] for o in obs0]])
    ols = np.linalg.lstsq(x, y, rcond=None)[0]
    assert abs(fit0.beta0 - ols[0]) < 1e-6
    assert abs(fit0.beta1 - ols[1]) < 1e-6
    _pass("mixed-model-oracle (closed form within 1e-6)")


def test_manova_oracle():
    """Wilks Lambda matches determinant-based oracle to 1e-10 on 50 datasets;
    univariate 2-group F equals ANOVA F to 1e-10; identical means -> (1, 0)."""
    rng = np.random.default_rng(4242)
    for _ in range(50):
        g = int(rng.integers(2, 5))
        p = int(rng.integers(1, 4))
        groups = [
            rng.normal(rng.normal(0, 0.5), 1.0, (int(rng.integers(p + 3, 14)), p))
            for _ in range(g)
        ]
        result = manova_wilks(groups)
        stacked = np.vstack(groups)
        grand = stacked.mean(axis=0)
        e_mat = np.zeros((p, p))
        h_mat = np.zeros((p, p))
        for a in groups:
            centered = a - a.mean(axis=0)
            e_mat += centered.T @ centered
            d = (a.mean(axis=0) - grand).reshape(-1, 1)
            h_mat += len(a) * d @ d.T
        oracle = np.linalg.det(e_mat) / np.linalg.det(e_mat + h_mat)
        assert abs(result.wilks_lambda - oracle) < 1e-10

    two_groups = [rng.normal(0, 1, 16), rng.normal(0.6, 1, 13)]
    manova = manova_wilks([g.reshape(-1, 1) for g in two_groups])
    anova = one_way_anova(two_groups)
    assert abs(manova.f_stat - anova.f_stat) < 1e-10

    base = rng.normal(0, 1, (10, 3))
    centered_groups = [base - base.mean(0), 1.7 * (base - base.mean(0))]
    identical = manova_wilks(centered_groups)
    assert abs(identical.wilks_lambda - 1.0) < 1e-12
    assert abs(identical.f_stat) < 1e-9
    _pass("manova-oracle (50 datasets to 1e-10)")


def _analysis_outcomes(corpus):
    """(counter-claim ANOVA Bonferroni p, {move: (beta1, p)}) for one corpus."""
    by_level = {}
    for annotated in corpus:
        level = annotated.essay.quality_level
        by_level.setdefault(level, []).append(
            move_ratios(annotated).ratios[MoveLabel.COUNTER_CLAIM]
        )
    groups = [by_level[q] for q in (QualityLevel.LOW, QualityLevel.MEDIUM, QualityLevel.HIGH)]
    cc_p = one_way_anova(groups).p_value
    cc_p_adj = bonferroni([cc_p], 5)[0]

    wave_results = {}
    for label in (MoveLabel.DATA, MoveLabel.COUNTER_CLAIM, MoveLabel.NON_ARGUMENT):
        obs = [
            (a.essay.learner_id, a.essay.wave, move_ratios(a, "percent").ratios[label])
            for a in corpus
        ]
        fit = fit_random_intercept(obs)
        wave_results[label] = (fit.beta1, fit.p_beta1)
    return cc_p_adj, wave_results


def test_statistical_power_and_size():
    """Effect corpora: counter-claim ANOVA significant after Bonferroni and
    correctly-signed significant wave coefficients, each in >= 90% of 50
    seeds. Null corpora: each test non-significant in >= 90% of 50 seeds."""
    started = time.monotonic()
    n_seeds = 50
    expected_signs = {MoveLabel.DATA: 1, MoveLabel.COUNTER_CLAIM: 1, MoveLabel.NON_ARGUMENT: -1}

    cc_hits = 0
    wave_hits = {label: 0 for label in expected_signs}
    for seed in range(n_seeds):
        corpus = generate_corpus(effect_config(seed=seed, learners=100, waves=12))
        cc_p_adj, wave_results = _analysis_outcomes(corpus)
        if cc_p_adj < 0.05:
            cc_hits += 1
        for label, (beta1, p) in wave_results.items():
            if p < 0.05 and math.copysign(1, beta1) == expected_signs[label]:
                wave_hits[label] += 1

    cc_null_ok = 0
    wave_null_ok = {label: 0 for label in expected_signs}
    for seed in range(n_seeds):
        corpus = generate_corpus(null_config(seed=10_000 + seed, learners=100, waves=12))
        cc_p_adj, wave_results = _analysis_outcomes(corpus)
        if cc_p_adj >= 0.05:
            cc_null_ok += 1
        for label, (_, p) in wave_results.items():
            if p >= 0.05:
                wave_null_ok[label] += 1

    elapsed = time.monotonic() - started
    assert cc_hits >= 0.9 * n_seeds, f"counter-claim ANOVA power {cc_hits}/{n_seeds}"
    for label, hits in wave_hits.items():
        assert hits >= 0.9 * n_seeds, f"{label.value} wave power {hits}/{n_seeds}"
    assert cc_null_ok >= 0.9 * n_seeds, f"counter-claim ANOVA size {cc_null_ok}/{n_seeds}"
    for label, hits in wave_null_ok.items():
        assert hits >= 0.9 * n_seeds, f"{label.value} wave size {hits}/{n_seeds}"
    assert elapsed < 300.0, f"power/size took {elapsed:.0f}s"
    _pass(
        f"statistical-power-size (power cc {cc_hits}/50, waves "
        f"{min(wave_hits.values())}+/50; size cc {cc_null_ok}/50, waves "
        f"{min(wave_null_ok.values())}+/50; {elapsed:.0f}s)"
    )


def test_report_fidelity(tmp_path, capsys):
    """evaluate emits the Annotation/Precision/Recall/F1/Cases columns;
    analyze-quality rows carry significance stars with the threshold note;
    analyze-development rows include AIC and BIC."""
    gold = tmp_path / "gold.jsonl"
    essays = tmp_path / "essays.jsonl"
    pred = tmp_path / "pred.jsonl"
    corpus = generate_corpus(effect_config(seed=9, learners=30, waves=12))
    with open(gold, "w", encoding="utf-8") as fh:
        serialize_annotated(corpus, fh)
    with open(essays, "w", encoding="utf-8") as fh:
        serialize_essays([a.essay for a in corpus], fh)
    assert cli.run(["annotate", "--input", str(essays), "--out", str(pred),
                    "--oracle-gold", str(gold)]) == 0

    eval_tsv = tmp_path / "eval.tsv"
    assert cli.run(["evaluate", "--pred", str(pred), "--gold", str(gold),
                    "--format", "tsv", "--out", str(eval_tsv)]) == 0
    lines = [l for l in eval_tsv.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].split("\t") == ["Annotation", "Precision", "Recall", "F1", "Cases"]
    assert lines[-1].startswith("Total\t")

    assert cli.run(["analyze-quality", "--input", str(gold)]) == 0
    quality_out = capsys.readouterr().out
    assert "Note. * p < .05, ** p < .01, *** p < .001" in quality_out
    for move in ("claim", "data", "counter_claim", "rebuttal_claim", "non_argument"):
        assert move in quality_out
    assert "Wilks Lambda" in quality_out
    assert "***" in quality_out  # the built-in counter-claim effect is starred

    assert cli.run(["analyze-development", "--input", str(gold)]) == 0
    development_out = capsys.readouterr().out
    for row in ("wave", "Intercept", "Between-individual", "Within-individual", "AIC", "BIC"):
        assert row in development_out
    _pass("report-fidelity (columns, stars, AIC/BIC rows)")
