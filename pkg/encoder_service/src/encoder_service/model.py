"""Bidirectional transformer encoder with a boundary-embedding head.

The essay is encoded as one sequence with marker tokens at segment
boundaries ([CLS] seg1 [SEP] seg2 [SEP] ... segM [SEP]); the virtual start
marker plus the M separator markers give every segment a left and a right
boundary embedding. Each segment is classified from the element-wise sum
of its two boundary embeddings through a linear layer and softmax.

No pretrained weights are bundled (the build environment is offline); the
encoder trains from scratch on the candidate-label training file. The
architecture contract is unchanged by this.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from .vocab import Vocab, tokenize

LABELS = (
    "title",
    "claim",
    "data",
    "counter_claim",
    "counter_data",
    "rebuttal_claim",
    "rebuttal_data",
    "non_argument",
    "none",
)
NUM_LABELS = len(LABELS)


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    dim_feedforward: int = 256
    dropout: float = 0.15
    max_len: int = 512


def _sinusoidal_positions(max_len: int, d_model: int) -> torch.Tensor:
    # fixed encodings: learned absolute positions let a small-corpus model
    # memorize essays by position instead of reading the tokens
    position = torch.arange(max_len).unsqueeze(1)
    div = torch.exp(torch.arange(0, d_model, 2) * (-math.log(10000.0) / d_model))
    table = torch.zeros(max_len, d_model)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table


class BoundaryEncoder(nn.Module):
    def __init__(self, vocab_size: int, config: ModelConfig):
        super().__init__()
        self.config = config
        self.token_embedding = nn.Embedding(vocab_size, config.d_model, padding_idx=0)
        self.register_buffer("position_table", _sinusoidal_positions(config.max_len, config.d_model))
        layer = nn.TransformerEncoderLayer(
            d_model=config.d_model,
            nhead=config.n_heads,
            dim_feedforward=config.dim_feedforward,
            dropout=config.dropout,
            activation="gelu",
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.n_layers, enable_nested_tensor=False)
        self.head = nn.Linear(config.d_model, NUM_LABELS)

    def forward(self, token_ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        """Hidden states (batch, length, d_model); pad_mask True at padding."""
        x = self.token_embedding(token_ids) + self.position_table[None, : token_ids.shape[1], :]
        return self.encoder(x, src_key_padding_mask=pad_mask)

    def segment_logits(self, hidden: torch.Tensor, boundaries: list[list[int]]) -> list[torch.Tensor]:
        """Per essay: (segments, NUM_LABELS) logits from summed boundary pairs."""
        out = []
        for row, bounds in enumerate(boundaries):
            b = torch.tensor(bounds, dtype=torch.long, device=hidden.device)
            summed = hidden[row, b[:-1], :] + hidden[row, b[1:], :]
            out.append(self.head(summed))
        return out


def encode_windows(
    vocab: Vocab, segments: list[str], max_len: int, overlap: bool = True
) -> tuple[list[tuple[list[int], list[int]]], list[tuple[int, int]]]:
    """Token ids + boundary positions per window, and (start, end) segment
    ranges. A window is [CLS] seg [SEP] seg [SEP] ...; windows are capped at
    max_len tokens, with ~50% overlap for inference so every segment gets
    central context (non-overlapping windows when training)."""
    seg_tokens = [vocab.encode(tokenize(s))[: max_len - 3] for s in segments]
    m = len(seg_tokens)
    ranges: list[tuple[int, int]] = []
    start = 0
    while start < m:
        end, used = start, 1  # CLS
        while end < m and (used + len(seg_tokens[end]) + 1 <= max_len or end == start):
            used += len(seg_tokens[end]) + 1
            end += 1
        ranges.append((start, end))
        if end >= m:
            break
        start = start + max(1, (end - start) // 2) if overlap else end

    encoded = []
    for a, b in ranges:
        ids = [vocab.cls_id]
        boundaries = [0]
        for tokens in seg_tokens[a:b]:
            ids.extend(tokens)
            ids.append(vocab.sep_id)
            boundaries.append(len(ids) - 1)
        encoded.append((ids, boundaries))
    return encoded, ranges


def assign_windows(n_segments: int, ranges: list[tuple[int, int]]) -> list[int]:
    """Each segment reads its label from the window whose center is nearest."""
    assignment = []
    for i in range(n_segments):
        best, best_dist = None, None
        for w, (a, b) in enumerate(ranges):
            if a <= i < b:
                d = abs(i - (a + b - 1) / 2)
                if best is None or d < best_dist:
                    best, best_dist = w, d
        assignment.append(best)
    return assignment


class EncoderBackend:
    """Loaded model + vocab; classifies segment lists into distributions."""

    def __init__(self, model: BoundaryEncoder, vocab: Vocab):
        self.model = model
        self.vocab = vocab
        self.model.eval()

    @torch.no_grad()
    def classify_segments(self, segments: list[str]) -> list[dict[str, float]]:
        max_len = self.model.config.max_len
        encoded, ranges = encode_windows(self.vocab, segments, max_len)
        per_window_probs = []
        for ids, boundaries in encoded:
            token_ids = torch.tensor([ids], dtype=torch.long)
            pad_mask = torch.zeros_like(token_ids, dtype=torch.bool)
            hidden = self.model(token_ids, pad_mask)
            logits = self.model.segment_logits(hidden, [boundaries])[0]
            per_window_probs.append(torch.softmax(logits.double(), dim=-1))
        out = []
        for i, w in enumerate(assign_windows(len(segments), ranges)):
            a, _ = ranges[w]
            probs = per_window_probs[w][i - a]
            probs = probs / probs.sum()  # exact renormalization in float64
            out.append({label: float(p) for label, p in zip(LABELS, probs)})
        return out


def save_checkpoint(directory: str | Path, model: BoundaryEncoder, vocab: Vocab) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.json").write_text(json.dumps(asdict(model.config)), encoding="utf-8")
    vocab.save(directory / "vocab.json")
    torch.save(model.state_dict(), directory / "weights.pt")


def load_checkpoint(directory: str | Path) -> EncoderBackend:
    directory = Path(directory)
    config = ModelConfig(**json.loads((directory / "config.json").read_text(encoding="utf-8")))
    vocab = Vocab.load(directory / "vocab.json")
    model = BoundaryEncoder(len(vocab), config)
    model.load_state_dict(torch.load(directory / "weights.pt", weights_only=True))
    return EncoderBackend(model, vocab)
