import json

import pytest

from encoder_service.model import ModelConfig, load_checkpoint
from encoder_service.train import TrainSettings, TrainingDataError, fine_tune, read_training_file

TINY = ModelConfig(d_model=32, n_heads=2, n_layers=1, dim_feedforward=64, max_len=128)


def write_training_file(path, n_essays=10, labels=("claim", "data")):
    cues = {"claim": "alpha", "data": "bravo"}
    with open(path, "w", encoding="utf-8") as fh:
        for k in range(n_essays):
            segments = []
            segment_labels = []
            for i in range(4):
                label = labels[(k + i) % len(labels)]
                segments.append(f"{cues[label]} filler words {i}. ")
            segment_labels = [labels[(k + i) % len(labels)] for i in range(4)]
            text = "".join(segments)
            candidates = []
            pos = 0
            for s in segments:
                candidates.append({"start": pos, "end": pos + len(s)})
                pos += len(s)
            fh.write(json.dumps({
                "essay_id": f"e{k}",
                "text": text,
                "candidates": candidates,
                "labels": segment_labels,
            }) + "\n")


class TestReadTrainingFile:
    def test_reads_segments(self, tmp_path):
        path = tmp_path / "train.jsonl"
        write_training_file(path, 3)
        records = read_training_file(path)
        assert len(records) == 3
        assert records[0]["segments"][0].startswith(("alpha", "bravo"))

    def test_misaligned_labels_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({
            "essay_id": "x", "text": "abc. def.",
            "candidates": [{"start": 0, "end": 5}],
            "labels": ["claim", "data"],
        }) + "\n")
        with pytest.raises(TrainingDataError, match="labels"):
            read_training_file(path)

    def test_unknown_label_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({
            "essay_id": "x", "text": "abc.",
            "candidates": [{"start": 0, "end": 4}],
            "labels": ["warrant"],
        }) + "\n")
        with pytest.raises(TrainingDataError, match="unknown"):
            read_training_file(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(TrainingDataError, match="no training records"):
            read_training_file(path)


class TestFineTune:
    def test_one_epoch_emits_loadable_checkpoint(self, tmp_path):
        train = tmp_path / "train.jsonl"
        write_training_file(train, 10)
        ckpt = tmp_path / "ckpt"
        losses = fine_tune(train, ckpt, TrainSettings(epochs=1), TINY, log=lambda *_: None)
        assert len(losses) == 1
        backend = load_checkpoint(ckpt)
        dists = backend.classify_segments(["alpha filler words 0. ", "bravo filler words 1. "])
        assert len(dists) == 2

    def test_loss_decreases_by_epoch_three(self, tmp_path):
        train = tmp_path / "train.jsonl"
        write_training_file(train, 12)
        losses = fine_tune(
            train, tmp_path / "ckpt", TrainSettings(epochs=3), TINY, log=lambda *_: None
        )
        assert losses[2] < losses[0]
