"""The `argmove` command line: one binary, one subcommand per pipeline stage.

    gen-synth            seeded synthetic gold corpus -> JSON lines
    split                train/validation/application split
    segment              rule-based candidate segmentation
    prepare-train        segment + gold alignment -> candidate-label file
    train-baseline       fit the native linear softmax classifier
    annotate             segment -> classify -> merge -> model annotations
    evaluate             span-level P/R/F1 report
    analyze-quality      move ratios by quality level (ANOVA + MANOVA)
    analyze-development  random-intercept models over waves

Exit codes: 0 success, 1 data error, 2 usage error. The environment
variable ARGMOVE_BACKEND_URL overrides --backend-url.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import corpus as corpus_mod
from . import evaluation, labeler, segmenter, stats, synthgen, verifier
from .corpus import AnnotatedEssay, CandidateLabel, Essay, Source

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE = 2


def _rules_from_args(args) -> segmenter.SegmentationRules:
    return segmenter.SegmentationRules(
        terminators=frozenset(args.terminators),
        title_rule=not args.no_title_rule,
        merge_connectives=tuple(args.merge_connective or ()),
    )


def _add_rules_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--terminators", default=".!?;:,", help="candidate terminator characters")
    parser.add_argument("--no-title-rule", action="store_true", help="disable the first-line title candidate")
    parser.add_argument("--merge-connective", action="append", metavar="WORD",
                        help="also open a candidate before this connective word (repeatable)")


def _read_annotated(path: str) -> list[AnnotatedEssay]:
    with open(path, encoding="utf-8") as fh:
        return corpus_mod.parse_corpus(fh)


def _read_essays(path: str) -> list[Essay]:
    with open(path, encoding="utf-8") as fh:
        return corpus_mod.parse_essays(fh)


def _write_text(path: str | None, content: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(content)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(content)


def _cmd_gen_synth(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = synthgen.parse_generator_config(fh.read())
    else:
        config = synthgen.GeneratorConfig()
    if args.seed is not None:
        config = synthgen.GeneratorConfig(**{**config.__dict__, "seed": args.seed})
    essays = synthgen.generate_corpus(config)
    with open(args.out, "w", encoding="utf-8") as fh:
        corpus_mod.serialize_annotated(essays, fh)
    print(f"wrote {len(essays)} essays to {args.out}")
    return EXIT_OK


def _cmd_split(args) -> int:
    essays = _read_annotated(args.input)
    ratios = tuple(float(x) for x in args.ratios.split(","))
    if len(ratios) != 3:
        raise ValueError("--ratios needs three comma-separated numbers")
    split = corpus_mod.split_corpus(essays, ratios, seed=args.seed, by_learner=args.by_learner)
    with open(args.train, "w", encoding="utf-8") as fh:
        corpus_mod.serialize_annotated(split.training, fh)
    with open(args.validation, "w", encoding="utf-8") as fh:
        corpus_mod.serialize_annotated(split.validation, fh)
    with open(args.application, "w", encoding="utf-8") as fh:
        corpus_mod.serialize_essays(split.application, fh)
    print(
        f"split {len(essays)} essays into "
        f"{len(split.training)}/{len(split.validation)}/{len(split.application)}"
    )
    return EXIT_OK


def _cmd_segment(args) -> int:
    rules = _rules_from_args(args)
    essays = _read_essays(args.input)
    with open(args.out, "w", encoding="utf-8") as fh:
        for essay in essays:
            candidates = segmenter.segment_candidates(essay.text, rules)
            fh.write(json.dumps({
                "essay_id": essay.essay_id,
                "candidates": [
                    {"index": c.index, "start": c.span.start, "end": c.span.end}
                    for c in candidates
                ],
            }, ensure_ascii=False) + "\n")
    print(f"segmented {len(essays)} essays to {args.out}")
    return EXIT_OK


def _cmd_prepare_train(args) -> int:
    rules = _rules_from_args(args)
    annotated = _read_annotated(args.input)
    with open(args.out, "w", encoding="utf-8") as fh:
        for a in annotated:
            candidates = segmenter.segment_candidates(a.essay.text, rules)
            labels = segmenter.align_gold(candidates, list(a.moves), snap=args.snap)
            fh.write(json.dumps({
                "essay_id": a.essay.essay_id,
                "text": a.essay.text,
                "candidates": [{"start": c.span.start, "end": c.span.end} for c in candidates],
                "labels": [l.value for l in labels],
            }, ensure_ascii=False) + "\n")
    print(f"prepared {len(annotated)} training essays to {args.out}")
    return EXIT_OK


def read_training_file(path: str):
    """Yield (Essay, candidates, labels) triples from a prepare-train file."""
    triples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            obj = json.loads(raw)
            essay = Essay(obj["essay_id"], obj.get("learner_id", "?"), 1, obj["text"])
            candidates = [
                segmenter.CandidateMove(corpus_mod.Span(c["start"], c["end"]), i + 1)
                for i, c in enumerate(obj["candidates"])
            ]
            labels = [CandidateLabel(l) for l in obj["labels"]]
            if len(labels) != len(candidates):
                raise corpus_mod.CorpusFormatError(
                    f"essay {obj['essay_id']!r}: {len(labels)} labels for "
                    f"{len(candidates)} candidates", line_no)
            triples.append((essay, candidates, labels))
    return triples


def _cmd_train_baseline(args) -> int:
    triples = read_training_file(args.train)
    lexicon = tuple(args.marker) if args.marker else labeler.DEFAULT_LEXICON
    config = labeler.TrainConfig(
        epochs=args.epochs, learning_rate=args.lr, l2=args.l2, seed=args.seed
    )
    model = labeler.train_baseline(triples, config, lexicon=lexicon)
    model.save(args.model)
    print(f"trained baseline on {len(triples)} essays; final loss {model.final_loss:.6f}; saved to {args.model}")
    return EXIT_OK


def _backend_from_args(args) -> labeler.BackendDescriptor:
    url = os.environ.get("ARGMOVE_BACKEND_URL", args.backend_url)
    chosen = [bool(args.model), bool(url), bool(args.oracle_gold)]
    if sum(chosen) != 1:
        raise ValueError("choose exactly one of --model, --backend-url, --oracle-gold")
    if args.model:
        return labeler.BackendDescriptor(labeler.BackendKind.BASELINE, model_path=args.model)
    if url:
        return labeler.BackendDescriptor(
            labeler.BackendKind.REMOTE,
            endpoint=url,
            timeout=args.timeout,
            retries=args.retries,
            concurrency=args.jobs,
            max_context_chars=args.max_context_chars,
        )
    return labeler.BackendDescriptor(labeler.BackendKind.ORACLE, gold_path=args.oracle_gold)


def annotate_essay(essay: Essay, rules, backend) -> AnnotatedEssay:
    candidates = segmenter.segment_candidates(essay.text, rules)
    context = labeler.build_context(essay, candidates)
    distributions = labeler.classify(backend, context)
    labels = labeler.predict_labels(distributions)
    moves, _ = verifier.merge_invalid(candidates, labels)
    return AnnotatedEssay(essay, tuple(moves), Source.MODEL)


def _cmd_annotate(args) -> int:
    rules = _rules_from_args(args)
    backend = labeler.resolve_backend(_backend_from_args(args))
    essays = _read_essays(args.input)

    def work(essay: Essay) -> AnnotatedEssay:
        return annotate_essay(essay, rules, backend)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            annotated = list(pool.map(work, essays))  # map preserves input order
    else:
        annotated = [work(e) for e in essays]
    with open(args.out, "w", encoding="utf-8") as fh:
        corpus_mod.serialize_annotated(annotated, fh)
    print(f"annotated {len(annotated)} essays to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    predicted = {a.essay.essay_id: a for a in _read_annotated(args.pred)}
    gold = {a.essay.essay_id: a for a in _read_annotated(args.gold)}
    missing = sorted(set(gold) - set(predicted))
    if missing:
        raise ValueError(f"predictions missing for essays: {missing[:5]}")
    counts = evaluation.MatchCounts()
    for essay_id in gold:
        counts.add(evaluation.match_moves(predicted[essay_id].moves, gold[essay_id].moves))
    report = evaluation.prf(counts, display_brackets=args.format == "pretty")
    out = report.to_pretty() if args.format == "pretty" else report.to_tsv()

    if args.candidate_level:
        rules = _rules_from_args(args)
        candidate_counts = evaluation.MatchCounts()
        for essay_id in gold:
            candidates = segmenter.segment_candidates(gold[essay_id].essay.text, rules)
            pred_labels = segmenter.align_gold(candidates, list(predicted[essay_id].moves))
            gold_labels = segmenter.align_gold(candidates, list(gold[essay_id].moves))
            candidate_counts.add(evaluation.evaluate_candidate_labels(pred_labels, gold_labels))
        candidate_report = evaluation.prf(candidate_counts, display_brackets=args.format == "pretty")
        separator = "\n" if args.format == "pretty" else ""
        out += separator + (
            candidate_report.to_pretty() if args.format == "pretty" else candidate_report.to_tsv()
        )
    _write_text(args.out, out)
    return EXIT_OK


def _cmd_analyze_quality(args) -> int:
    essays = _read_annotated(args.input)
    report = stats.quality_analysis(essays, scale=args.scale)
    _write_text(args.out, report.to_pretty() if args.format == "pretty" else report.to_tsv())
    return EXIT_OK


def _cmd_analyze_development(args) -> int:
    essays = _read_annotated(args.input)
    report = stats.development_analysis(essays, scale=args.scale, reml=args.reml)
    _write_text(args.out, report.to_pretty() if args.format == "pretty" else report.to_tsv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="argmove", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic gold corpus")
    p.add_argument("--config", help="generator config file (key = value)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_synth)

    p = sub.add_parser("split", help="train/validation/application split")
    p.add_argument("--input", required=True)
    p.add_argument("--ratios", default="0.70,0.15,0.15")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--by-learner", action="store_true")
    p.add_argument("--train", required=True)
    p.add_argument("--validation", required=True)
    p.add_argument("--application", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("segment", help="candidate segmentation")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    _add_rules_flags(p)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("prepare-train", help="emit candidate-label training file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--snap", action="store_true",
                   help="snap misaligned gold ends to the nearest candidate end on the right")
    _add_rules_flags(p)
    p.set_defaults(func=_cmd_prepare_train)

    p = sub.add_parser("train-baseline", help="train the native baseline classifier")
    p.add_argument("--train", required=True, help="prepare-train output file")
    p.add_argument("--model", required=True, help="output model path (JSON)")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.3)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--marker", action="append", help="lexicon marker phrase (repeatable)")
    p.set_defaults(func=_cmd_train_baseline)

    p = sub.add_parser("annotate", help="segment + classify + merge")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="baseline model path")
    p.add_argument("--backend-url", help="remote backend endpoint")
    p.add_argument("--oracle-gold", help="gold file for the oracle backend")
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--max-context-chars", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    _add_rules_flags(p)
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("evaluate", help="span-level P/R/F1 report")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--format", choices=("tsv", "pretty"), default="pretty")
    p.add_argument("--out", default="-")
    p.add_argument("--candidate-level", action="store_true",
                   help="also report candidate-level metrics (includes the none row)")
    _add_rules_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("analyze-quality", help="move ratios by quality level")
    p.add_argument("--input", required=True)
    p.add_argument("--scale", choices=("fraction", "percent"), default="fraction")
    p.add_argument("--format", choices=("tsv", "pretty"), default="pretty")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_analyze_quality)

    p = sub.add_parser("analyze-development", help="random-intercept models over waves")
    p.add_argument("--input", required=True)
    p.add_argument("--scale", choices=("fraction", "percent"), default="percent")
    p.add_argument("--format", choices=("tsv", "pretty"), default="pretty")
    p.add_argument("--reml", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_analyze_development)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (corpus_mod.CorpusFormatError, segmenter.BoundaryMismatchError,
            labeler.BackendError, evaluation.PartitionMismatchError,
            stats.SingularScatterError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
