#!/usr/bin/env python3
"""End-to-end demo on a synthetic corpus.

Generates a gold corpus, splits it, trains the baseline classifier on the
training set, annotates the validation set with both the oracle and the
baseline, and prints the evaluation and analysis reports.

Usage: python scripts/run_synthetic_experiment.py [workdir]
"""
import subprocess
import sys
import tempfile
from pathlib import Path

SRC = Path(__file__).resolve().parent.parent / "src"
sys.path.insert(0, str(SRC))

from argmoves import cli  # noqa: E402
from argmoves.corpus import parse_corpus, serialize_essays  # noqa: E402
from argmoves.synthgen import DEFAULT_CUES  # noqa: E402


def sh(argv):
    print(f"$ argmove {' '.join(argv)}")
    code = cli.run(argv)
    if code != 0:
        sys.exit(code)


def main():
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="argmoves-"))
    workdir.mkdir(parents=True, exist_ok=True)
    gold = workdir / "corpus.jsonl"
    train, val, app = (workdir / n for n in ("train.jsonl", "val.jsonl", "app.jsonl"))

    sh(["gen-synth", "--seed", "7", "--out", str(gold)])
    sh(["split", "--input", str(gold), "--seed", "7",
        "--train", str(train), "--validation", str(val), "--application", str(app)])

    train_file = workdir / "candidates.jsonl"
    sh(["prepare-train", "--input", str(train), "--out", str(train_file)])

    model = workdir / "baseline.json"
    argv = ["train-baseline", "--train", str(train_file), "--model", str(model), "--epochs", "400"]
    for cues in DEFAULT_CUES.values():
        for cue in cues:
            argv += ["--marker", cue]
    sh(argv)

    with open(val, encoding="utf-8") as fh:
        val_essays = [a.essay for a in parse_corpus(fh)]
    val_plain = workdir / "val_essays.jsonl"
    with open(val_plain, "w", encoding="utf-8") as fh:
        serialize_essays(val_essays, fh)

    oracle_pred = workdir / "pred_oracle.jsonl"
    baseline_pred = workdir / "pred_baseline.jsonl"
    sh(["annotate", "--input", str(val_plain), "--out", str(oracle_pred),
        "--oracle-gold", str(val)])
    sh(["annotate", "--input", str(val_plain), "--out", str(baseline_pred),
        "--model", str(model)])

    print("\n=== oracle backend (identity check) ===")
    sh(["evaluate", "--pred", str(oracle_pred), "--gold", str(val)])
    print("\n=== baseline backend ===")
    sh(["evaluate", "--pred", str(baseline_pred), "--gold", str(val), "--candidate-level"])

    print("\n=== quality analysis (gold annotations) ===")
    sh(["analyze-quality", "--input", str(gold)])
    print("\n=== development analysis (gold annotations) ===")
    sh(["analyze-development", "--input", str(gold)])
    print(f"\nartifacts in {workdir}")


if __name__ == "__main__":
    main()
