"""MergeInvalid: fold `none` candidates rightward into final moves.

Each maximal run of none-labeled candidates merges with the first valid
candidate to its right, forming one move spanning the union and carrying
that right candidate's label. A trailing none run (possible only with
model predictions) merges leftward into the last valid move; an all-none
essay collapses to a single non_argument move, flagged in the trace.
"""
from __future__ import annotations

from dataclasses import dataclass

from .corpus import AnnotatedMove, CandidateLabel, MoveLabel, Span, move_from_candidate
from .segmenter import CandidateMove


@dataclass(frozen=True)
class MergeTrace:
    """Per final move, the 1-based candidate indices it absorbed."""

    groups: tuple[tuple[int, ...], ...]
    all_none_fallback: bool = False


def merge_invalid(
    candidates: list[CandidateMove],
    labels: list[CandidateLabel],
) -> tuple[list[AnnotatedMove], MergeTrace]:
    if len(candidates) != len(labels):
        raise ValueError(f"{len(labels)} labels for {len(candidates)} candidates")
    if not candidates:
        raise ValueError("no candidates")

    if all(label is CandidateLabel.NONE for label in labels):
        span = Span(candidates[0].span.start, candidates[-1].span.end)
        trace = MergeTrace((tuple(c.index for c in candidates),), all_none_fallback=True)
        return [AnnotatedMove(span, MoveLabel.NON_ARGUMENT)], trace

    moves: list[AnnotatedMove] = []
    groups: list[tuple[int, ...]] = []
    pending: list[CandidateMove] = []
    for cand, label in zip(candidates, labels):
        pending.append(cand)
        if label is not CandidateLabel.NONE:
            span = Span(pending[0].span.start, cand.span.end)
            moves.append(AnnotatedMove(span, move_from_candidate(label)))
            groups.append(tuple(c.index for c in pending))
            pending = []
    if pending:  # trailing none run: leftward fallback
        last = moves.pop()
        moves.append(AnnotatedMove(Span(last.span.start, pending[-1].span.end), last.label))
        groups[-1] = groups[-1] + tuple(c.index for c in pending)

    return moves, MergeTrace(tuple(groups))
