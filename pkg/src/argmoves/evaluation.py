"""Span-level and candidate-level precision/recall/F1.

Matching is exact: a predicted move is a true positive iff some gold move
has the identical span and identical label. Candidate-level evaluation
compares label sequences position-wise over the 9-label set (including
`none`). Micro aggregates pool tp/fp/fn over labels. Division by zero
yields metric 0 and marks the row degenerate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .corpus import (
    CANDIDATE_LABEL_ORDER,
    AnnotatedMove,
    CandidateLabel,
    candidate_from_move,
)


def round_half_up(x: float, places: int = 2) -> float:
    return float(Decimal(repr(x)).quantize(Decimal(10) ** -places, rounding=ROUND_HALF_UP))


@dataclass
class MatchCounts:
    """Per-label tp/fp/fn tallies; tp + fn == support for every label."""

    tp: dict[CandidateLabel, int] = field(default_factory=dict)
    fp: dict[CandidateLabel, int] = field(default_factory=dict)
    fn: dict[CandidateLabel, int] = field(default_factory=dict)

    def add(self, other: "MatchCounts") -> "MatchCounts":
        for label in CANDIDATE_LABEL_ORDER:
            for mine, theirs in ((self.tp, other.tp), (self.fp, other.fp), (self.fn, other.fn)):
                if theirs.get(label):
                    mine[label] = mine.get(label, 0) + theirs[label]
        return self

    def support(self, label: CandidateLabel) -> int:
        return self.tp.get(label, 0) + self.fn.get(label, 0)

    def labels_present(self) -> list[CandidateLabel]:
        return [
            l
            for l in CANDIDATE_LABEL_ORDER
            if self.tp.get(l, 0) or self.fp.get(l, 0) or self.fn.get(l, 0)
        ]

    def totals(self) -> tuple[int, int, int]:
        return (
            sum(self.tp.values()),
            sum(self.fp.values()),
            sum(self.fn.values()),
        )


class PartitionMismatchError(ValueError):
    pass


def match_moves(predicted: Sequence[AnnotatedMove], gold: Sequence[AnnotatedMove]) -> MatchCounts:
    """Exact span+label matching between two move partitions of one text."""
    if not predicted or not gold:
        raise PartitionMismatchError("empty move list")
    if predicted[0].span.start != gold[0].span.start or predicted[-1].span.end != gold[-1].span.end:
        raise PartitionMismatchError(
            f"predicted covers ({predicted[0].span.start}, {predicted[-1].span.end}) "
            f"but gold covers ({gold[0].span.start}, {gold[-1].span.end})"
        )
    counts = MatchCounts()
    gold_by_span = {(m.span.start, m.span.end): m.label for m in gold}
    matched: set[tuple[int, int]] = set()
    for move in predicted:
        key = (move.span.start, move.span.end)
        label = candidate_from_move(move.label)
        if gold_by_span.get(key) == move.label:
            counts.tp[label] = counts.tp.get(label, 0) + 1
            matched.add(key)
        else:
            counts.fp[label] = counts.fp.get(label, 0) + 1
    for move in gold:
        if (move.span.start, move.span.end) not in matched:
            label = candidate_from_move(move.label)
            counts.fn[label] = counts.fn.get(label, 0) + 1
    return counts


def evaluate_candidate_labels(
    predicted: Sequence[CandidateLabel], gold: Sequence[CandidateLabel]
) -> MatchCounts:
    """Position-wise comparison of candidate label sequences."""
    if len(predicted) != len(gold):
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs {len(gold)} gold")
    counts = MatchCounts()
    for p, g in zip(predicted, gold):
        if p is g:
            counts.tp[p] = counts.tp.get(p, 0) + 1
        else:
            counts.fp[p] = counts.fp.get(p, 0) + 1
            counts.fn[g] = counts.fn.get(g, 0) + 1
    return counts


@dataclass(frozen=True)
class EvalRow:
    label: str
    precision: float
    recall: float
    f1: float
    cases: int
    degenerate: bool = False


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]
    total: EvalRow

    def to_tsv(self) -> str:
        lines = ["Annotation\tPrecision\tRecall\tF1\tCases"]
        for row in (*self.rows, self.total):
            lines.append(
                f"{row.label}\t{row.precision!r}\t{row.recall!r}\t{row.f1!r}\t{row.cases}"
            )
        degenerate = [r.label for r in (*self.rows, self.total) if r.degenerate]
        if degenerate:
            lines.append("# degenerate: " + ",".join(degenerate))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_tsv(text: str) -> "EvalReport":
        lines = [l for l in text.splitlines() if l.strip()]
        if not lines or lines[0].split("\t") != ["Annotation", "Precision", "Recall", "F1", "Cases"]:
            raise ValueError("not an evaluation report TSV")
        degenerate: set[str] = set()
        body = []
        for line in lines[1:]:
            if line.startswith("# degenerate:"):
                degenerate = {s for s in line.split(":", 1)[1].strip().split(",") if s}
                continue
            body.append(line.split("\t"))
        rows = [
            EvalRow(label, float(p), float(r), float(f1), int(cases), label in degenerate)
            for label, p, r, f1, cases in body
        ]
        return EvalReport(tuple(rows[:-1]), rows[-1])

    def to_pretty(self) -> str:
        header = f"{'Annotation':<16}{'Precision':>10}{'Recall':>10}{'F1':>10}{'Cases':>8}"
        lines = [header, "-" * len(header)]
        for row in (*self.rows, self.total):
            lines.append(
                f"{row.label:<16}"
                f"{round_half_up(row.precision):>10.2f}"
                f"{round_half_up(row.recall):>10.2f}"
                f"{round_half_up(row.f1):>10.2f}"
                f"{row.cases:>8}"
            )
        return "\n".join(lines) + "\n"


def _prf_one(tp: int, fp: int, fn: int) -> tuple[float, float, float, bool]:
    degenerate = False
    if tp + fp == 0:
        precision, degenerate = 0.0, True
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall, degenerate = 0.0, True
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0:
        f1 = 0.0
        degenerate = degenerate or (tp + fp + fn == 0)
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1, degenerate


def prf(counts: MatchCounts, display_brackets: bool = False) -> EvalReport:
    """Per-label and pooled (micro) precision, recall, F1."""
    rows = []
    for label in counts.labels_present():
        tp, fp, fn = counts.tp.get(label, 0), counts.fp.get(label, 0), counts.fn.get(label, 0)
        p, r, f1, degenerate = _prf_one(tp, fp, fn)
        name = f"[{label.value}]" if display_brackets else label.value
        rows.append(EvalRow(name, p, r, f1, tp + fn, degenerate))
    tp, fp, fn = counts.totals()
    p, r, f1, degenerate = _prf_one(tp, fp, fn)
    total = EvalRow("Total", p, r, f1, tp + fn, degenerate)
    return EvalReport(tuple(rows), total)
