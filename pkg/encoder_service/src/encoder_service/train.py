"""Fine-tuning on the candidate-label training file.

Input records (JSON lines, from the pipeline's prepare-train stage):

    {"essay_id": str, "text": str,
     "candidates": [{"start": int, "end": int}], "labels": [str]}

Cross-entropy over every segment; Adam; per-epoch mean loss logged.
Determinism: seeded torch RNG; bit-identical runs are subject to the usual
framework/threading caveats, same-machine single-thread runs reproduce.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from .model import LABELS, BoundaryEncoder, ModelConfig, encode_windows, save_checkpoint
from .vocab import Vocab


@dataclass
class TrainSettings:
    epochs: int = 80
    learning_rate: float = 1e-3
    batch_size: int = 8
    seed: int = 0
    min_count: int = 1
    word_dropout: float = 0.1  # corpus-level regularizer against memorization


class TrainingDataError(ValueError):
    pass


def read_training_file(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            obj = json.loads(raw)
            if len(obj["candidates"]) != len(obj["labels"]):
                raise TrainingDataError(
                    f"line {line_no}: essay {obj.get('essay_id')!r} has "
                    f"{len(obj['labels'])} labels for {len(obj['candidates'])} candidates"
                )
            unknown = [l for l in obj["labels"] if l not in LABELS]
            if unknown:
                raise TrainingDataError(f"line {line_no}: unknown labels {unknown}")
            obj["segments"] = [obj["text"][c["start"]:c["end"]] for c in obj["candidates"]]
            records.append(obj)
    if not records:
        raise TrainingDataError(f"{path}: no training records")
    return records


def _examples(records: list[dict], vocab: Vocab, max_len: int):
    """(token_ids, boundaries, label_ids) per window; training uses
    non-overlapping windows so each segment is supervised once."""
    label_index = {label: i for i, label in enumerate(LABELS)}
    examples = []
    for record in records:
        encoded, ranges = encode_windows(vocab, record["segments"], max_len, overlap=False)
        for (ids, boundaries), (a, b) in zip(encoded, ranges):
            labels = [label_index[l] for l in record["labels"][a:b]]
            examples.append((ids, boundaries, labels))
    return examples


def _batches(examples, batch_size, rng):
    order = list(range(len(examples)))
    rng.shuffle(order)
    for k in range(0, len(order), batch_size):
        yield [examples[i] for i in order[k : k + batch_size]]


def fine_tune(
    train_path: str | Path,
    out_dir: str | Path,
    settings: TrainSettings | None = None,
    config: ModelConfig | None = None,
    log=print,
) -> list[float]:
    """Train from the prepare-train file and write a servable checkpoint.

    Returns the per-epoch mean losses.
    """
    settings = settings or TrainSettings()
    config = config or ModelConfig()
    records = read_training_file(train_path)

    torch.manual_seed(settings.seed)
    rng = random.Random(settings.seed)
    vocab = Vocab.build([r["text"] for r in records], min_count=settings.min_count)
    model = BoundaryEncoder(len(vocab), config)
    optimizer = torch.optim.Adam(model.parameters(), lr=settings.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    examples = _examples(records, vocab, config.max_len)

    unk_id = vocab.stoi["[UNK]"]
    n_special = 4

    epoch_losses = []
    model.train()
    for epoch in range(1, settings.epochs + 1):
        total, count = 0.0, 0
        for batch in _batches(examples, settings.batch_size, rng):
            width = max(len(ids) for ids, _, _ in batch)
            token_ids = torch.zeros((len(batch), width), dtype=torch.long)
            pad_mask = torch.ones((len(batch), width), dtype=torch.bool)
            boundaries = []
            target = []
            for row, (ids, bounds, labels) in enumerate(batch):
                token_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
                pad_mask[row, : len(ids)] = False
                boundaries.append(bounds)
                target.extend(labels)
            if settings.word_dropout > 0:
                drop = (torch.rand_like(token_ids, dtype=torch.float) < settings.word_dropout) & (
                    token_ids >= n_special
                )
                token_ids = token_ids.masked_fill(drop, unk_id)
            hidden = model(token_ids, pad_mask)
            logits = torch.cat(model.segment_logits(hidden, boundaries), dim=0)
            loss = loss_fn(logits, torch.tensor(target, dtype=torch.long))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(target)
            count += len(target)
        epoch_losses.append(total / count)
        log(f"epoch {epoch}/{settings.epochs}: loss {epoch_losses[-1]:.4f}")

    save_checkpoint(out_dir, model, vocab)
    return epoch_losses
