"""Rule-based candidate move segmentation and gold-label alignment.

Candidates are the finest-granularity fragments delimited by punctuation:
a candidate ends at a terminator run (one or more terminator characters,
then any closing quotes/brackets, then any whitespace), at the end of the
first line when the title rule is on, or at end of text. Inter-candidate
whitespace always belongs to the preceding candidate, so candidates
partition the text exactly.

Protected positions never terminate: `.`/`,` between digits ("3.14",
"1,000") and `.` between a single letter and a letter ("U.S", "i.e").
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import AnnotatedMove, CandidateLabel, Span, candidate_from_move

DEFAULT_TERMINATORS = frozenset(".!?;:,")
_CLOSERS = frozenset("\"')]}’”»")


@dataclass(frozen=True)
class CandidateMove:
    """A candidate fragment; `index` is its 1-based ordinal in the essay."""

    span: Span
    index: int


@dataclass(frozen=True)
class SegmentationRules:
    terminators: frozenset[str] = DEFAULT_TERMINATORS
    title_rule: bool = True
    merge_connectives: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terminators", frozenset(self.terminators))
        object.__setattr__(self, "merge_connectives", tuple(self.merge_connectives))
        if not self.terminators:
            raise ValueError("terminator set must be non-empty")


class BoundaryMismatchError(ValueError):
    """A gold move end coincides with no candidate end."""

    def __init__(self, offset: int):
        self.offset = offset
        super().__init__(f"gold move end {offset} aligns with no candidate end")


def _protected(text: str, i: int) -> bool:
    ch = text[i]
    prev = text[i - 1] if i > 0 else ""
    nxt = text[i + 1] if i + 1 < len(text) else ""
    if ch in ".," and prev.isdigit() and nxt.isdigit():
        return True
    if ch == "." and prev.isalpha() and nxt.isalpha():
        before = text[i - 2] if i >= 2 else ""
        if not before.isalnum():  # prev is a single-letter token
            return True
    return False


def _terminator_boundaries(text: str, terminators: frozenset[str]) -> list[int]:
    ends = []
    n = len(text)
    i = 0
    while i < n:
        if text[i] in terminators and not _protected(text, i):
            j = i + 1
            while j < n and (text[j] in terminators or text[j] in _CLOSERS):
                j += 1
            while j < n and text[j].isspace():
                j += 1
            ends.append(j)
            i = j
        else:
            i += 1
    return ends


def _connective_boundaries(text: str, connectives: tuple[str, ...]) -> list[int]:
    ends = []
    for word in connectives:
        for m in re.finditer(rf"(?<=\s){re.escape(word)}\b", text):
            ends.append(m.start())
    return ends


def segment_candidates(text: str, rules: SegmentationRules | None = None) -> list[CandidateMove]:
    """Split an essay into candidate moves that partition its text."""
    if not text:
        raise ValueError("text is empty")
    rules = rules or SegmentationRules()
    boundaries = set(_terminator_boundaries(text, rules.terminators))
    if rules.title_rule:
        first_nl = text.find("\n")
        if first_nl != -1:
            boundaries.add(first_nl + 1)
    if rules.merge_connectives:
        boundaries.update(_connective_boundaries(text, rules.merge_connectives))
    boundaries.add(len(text))
    boundaries.discard(0)

    cuts = sorted(b for b in boundaries if b <= len(text))
    spans: list[Span] = []
    start = 0
    for end in cuts:
        spans.append(Span(start, end))
        start = end

    # whitespace-only fragments attach to the preceding candidate
    merged: list[Span] = []
    for span in spans:
        if merged and span.slice(text).isspace():
            prev = merged.pop()
            merged.append(Span(prev.start, span.end))
        else:
            merged.append(span)
    # a leading whitespace-only span (no preceding candidate) joins its successor
    if len(merged) > 1 and merged[0].slice(text).isspace():
        merged = [Span(merged[0].start, merged[1].end)] + merged[2:]

    return [CandidateMove(span, i + 1) for i, span in enumerate(merged)]


def align_gold(
    candidates: list[CandidateMove],
    gold: list[AnnotatedMove],
    snap: bool = False,
) -> list[CandidateLabel]:
    """Assign each candidate its ground-truth candidate label.

    The candidate sharing a gold move's ending position receives that move's
    label; every other candidate receives `none`. A gold end that matches no
    candidate end raises BoundaryMismatchError, or under `snap` relabels via
    the nearest candidate end to the right.
    """
    end_to_pos = {c.span.end: i for i, c in enumerate(candidates)}
    ends_sorted = sorted(end_to_pos)
    labels = [CandidateLabel.NONE] * len(candidates)
    for move in gold:
        pos = end_to_pos.get(move.span.end)
        if pos is None:
            if not snap:
                raise BoundaryMismatchError(move.span.end)
            right = next((e for e in ends_sorted if e >= move.span.end), None)
            if right is None:
                right = ends_sorted[-1]
            pos = end_to_pos[right]
        labels[pos] = candidate_from_move(move.label)
    return labels
