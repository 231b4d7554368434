"""Full-stack check against the annotation pipeline.

The pipeline package is exercised ONLY through its external surfaces: the
`argmove` CLI (via subprocess) and the wire protocol (via a served
checkpoint). On a corpus where many moves span two candidates (so the
move-initial cue is invisible to the final candidate's hand features),
the encoder must beat the trained baseline's candidate-level micro-F1,
and the remote-backed pipeline must complete annotate + evaluate.
"""
import json
import subprocess
import sys
import threading
from pathlib import Path

import pytest

from encoder_service.model import ModelConfig, load_checkpoint
from encoder_service.server import make_server
from encoder_service.train import TrainSettings, fine_tune

PIPELINE_SRC = Path(__file__).resolve().parents[2] / "src"

CUES = {
    "claim": ("I believe", "We should agree that", "My view is that"),
    "data": ("For example", "Studies show that", "In fact"),
    "counter_claim": ("Some may say", "Opponents argue that", "However some think"),
    "counter_data": ("They cite evidence that", "Their support is that"),
    "rebuttal_claim": ("But this view is mistaken", "Yet that argument fails"),
    "rebuttal_data": ("In reality", "The record shows that"),
    "non_argument": ("By the way", "Um well"),
}

GENERATOR_CONFIG = """
seed = 31
learners = 48
waves = 5
internal_split_prob = 0.35
learner_sd = 0
[trends]
"""


def argmove(*argv):
    result = subprocess.run(
        [sys.executable, "-m", "argmoves.cli", *argv],
        env={"PYTHONPATH": str(PIPELINE_SRC), "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, f"argmove {argv[0]} failed: {result.stderr}"
    return result.stdout


def candidate_total_f1(report_tsv: str) -> float:
    """Total row of the SECOND table (candidate-level) in evaluate output."""
    tables = report_tsv.split("Annotation\tPrecision\tRecall\tF1\tCases")
    assert len(tables) == 3, "expected move-level and candidate-level tables"
    for line in tables[2].strip().splitlines():
        if line.startswith("Total\t"):
            return float(line.split("\t")[3])
    raise AssertionError("candidate-level Total row missing")


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("integration")
    config = root / "gen.cfg"
    config.write_text(GENERATOR_CONFIG)
    gold = root / "gold.jsonl"
    argmove("gen-synth", "--config", str(config), "--out", str(gold))
    train, val, app = (root / n for n in ("train.jsonl", "val.jsonl", "app.jsonl"))
    argmove("split", "--input", str(gold), "--seed", "1",
            "--train", str(train), "--validation", str(val), "--application", str(app))

    train_file = root / "candidates.jsonl"
    argmove("prepare-train", "--input", str(train), "--out", str(train_file))

    # validation essays without annotations, plus their gold for evaluation
    val_plain = root / "val_essays.jsonl"
    with open(val, encoding="utf-8") as fh, open(val_plain, "w", encoding="utf-8") as out:
        for line in fh:
            obj = json.loads(line)
            obj["moves"] = None
            obj["source"] = None
            out.write(json.dumps(obj) + "\n")
    return root, train_file, val, val_plain


@pytest.fixture(scope="module")
def baseline_f1(workspace):
    root, train_file, val, val_plain = workspace
    model = root / "baseline.json"
    argv = ["train-baseline", "--train", str(train_file), "--model", str(model),
            "--epochs", "400"]
    for cues in CUES.values():
        for cue in cues:
            argv += ["--marker", cue]
    argmove(*argv)
    pred = root / "pred_baseline.jsonl"
    argmove("annotate", "--input", str(val_plain), "--out", str(pred), "--model", str(model))
    report = root / "baseline.tsv"
    argmove("evaluate", "--pred", str(pred), "--gold", str(val),
            "--format", "tsv", "--candidate-level", "--out", str(report))
    return candidate_total_f1(report.read_text())


@pytest.fixture(scope="module")
def encoder_url(workspace):
    root, train_file, _, _ = workspace
    checkpoint = root / "ckpt"
    fine_tune(train_file, checkpoint, TrainSettings(seed=0), ModelConfig(), log=lambda *_: None)
    server = make_server(load_checkpoint(checkpoint), port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address
    yield f"http://{host}:{port}/classify"
    server.shutdown()
    server.server_close()


def test_encoder_beats_baseline_and_pipeline_completes(workspace, baseline_f1, encoder_url):
    root, _, val, val_plain = workspace
    pred = root / "pred_encoder.jsonl"
    argmove("annotate", "--input", str(val_plain), "--out", str(pred),
            "--backend-url", encoder_url, "--jobs", "2")
    report = root / "encoder.tsv"
    argmove("evaluate", "--pred", str(pred), "--gold", str(val),
            "--format", "tsv", "--candidate-level", "--out", str(report))
    encoder_f1 = candidate_total_f1(report.read_text())
    print(f"candidate-level micro-F1: encoder {encoder_f1:.4f} vs baseline {baseline_f1:.4f}")
    assert encoder_f1 > baseline_f1
