"""Essay/annotation data model, JSON-lines corpus format, validation, splits.

The annotation file format is JSON lines (UTF-8, one object per line):

    {"essay_id": str, "learner_id": str, "wave": int,
     "quality_level": "low"|"medium"|"high"|null, "text": str,
     "moves": [{"start": int, "end": int, "label": str}] | null,
     "source": "human"|"model"|null}

Move spans are character offsets over the decoded text (inclusive start,
exclusive end) and must partition the text: sorted, non-overlapping,
contiguous, first start 0, last end len(text).
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import IO, Iterable, Sequence


class MoveLabel(str, Enum):
    """The closed 8-label inventory of argumentative moves."""

    TITLE = "title"
    CLAIM = "claim"
    DATA = "data"
    COUNTER_CLAIM = "counter_claim"
    COUNTER_DATA = "counter_data"
    REBUTTAL_CLAIM = "rebuttal_claim"
    REBUTTAL_DATA = "rebuttal_data"
    NON_ARGUMENT = "non_argument"


class CandidateLabel(str, Enum):
    """Move labels plus the `none` sentinel for invalid candidate splits."""

    TITLE = "title"
    CLAIM = "claim"
    DATA = "data"
    COUNTER_CLAIM = "counter_claim"
    COUNTER_DATA = "counter_data"
    REBUTTAL_CLAIM = "rebuttal_claim"
    REBUTTAL_DATA = "rebuttal_data"
    NON_ARGUMENT = "non_argument"
    NONE = "none"


# Fixed label order used for reports and argmax tie-breaking (`none` last).
MOVE_LABEL_ORDER: tuple[MoveLabel, ...] = tuple(MoveLabel)
CANDIDATE_LABEL_ORDER: tuple[CandidateLabel, ...] = tuple(CandidateLabel)


def candidate_from_move(label: MoveLabel) -> CandidateLabel:
    return CandidateLabel(label.value)


def move_from_candidate(label: CandidateLabel) -> MoveLabel:
    if label is CandidateLabel.NONE:
        raise ValueError("`none` is not a move label")
    return MoveLabel(label.value)


class QualityLevel(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class Source(str, Enum):
    HUMAN = "human"
    MODEL = "model"


class CorpusFormatError(ValueError):
    """Malformed annotation record; carries line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Essay:
    essay_id: str
    learner_id: str
    wave: int
    text: str
    quality_level: QualityLevel | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"essay {self.essay_id!r}: text is empty")
        if self.wave < 1:
            raise ValueError(f"essay {self.essay_id!r}: wave must be >= 1, got {self.wave}")


@dataclass(frozen=True, order=True)
class Span:
    """Character span, inclusive start / exclusive end."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span ({self.start}, {self.end})")

    def slice(self, text: str) -> str:
        return text[self.start : self.end]


@dataclass(frozen=True)
class AnnotatedMove:
    span: Span
    label: MoveLabel


@dataclass(frozen=True)
class AnnotatedEssay:
    """Essay plus a move partition.

    Construction is permissive beyond basic types so that
    :func:`validate_annotated` can describe broken data; callers that need
    the invariants enforced run it (parse_corpus does).
    """

    essay: Essay
    moves: tuple[AnnotatedMove, ...]
    source: Source = Source.HUMAN

    def __post_init__(self):
        object.__setattr__(self, "moves", tuple(self.moves))


@dataclass(frozen=True)
class CorpusSplit:
    training: tuple[AnnotatedEssay, ...]
    validation: tuple[AnnotatedEssay, ...]
    application: tuple[Essay, ...]


def validate_annotated(annotated: AnnotatedEssay) -> list[str]:
    """Return invariant violations (empty list iff the essay is well-formed)."""
    violations: list[str] = []
    text = annotated.essay.text
    moves = annotated.moves
    if not moves:
        violations.append("essay has no moves")
        return violations
    for k, move in enumerate(moves):
        if move.span.end > len(text):
            violations.append(f"move {k} span ({move.span.start}, {move.span.end}) exceeds text length {len(text)}")
    for k in range(len(moves) - 1):
        a, b = moves[k].span, moves[k + 1].span
        if b.start < a.end:
            violations.append(f"overlap between move {k} and move {k + 1}")
        elif b.start > a.end:
            violations.append(f"non-contiguous spans: gap between move {k} and move {k + 1}")
    if moves[0].span.start != 0:
        violations.append("moves do not start at offset 0")
    if moves[-1].span.end != len(text):
        violations.append("moves do not cover text")
    return violations


def _move_to_json(move: AnnotatedMove) -> dict:
    return {"start": move.span.start, "end": move.span.end, "label": move.label.value}


def _essay_record(essay: Essay, moves: Sequence[AnnotatedMove] | None, source: Source | None) -> dict:
    return {
        "essay_id": essay.essay_id,
        "learner_id": essay.learner_id,
        "wave": essay.wave,
        "quality_level": essay.quality_level.value if essay.quality_level else None,
        "text": essay.text,
        "moves": [_move_to_json(m) for m in moves] if moves is not None else None,
        "source": source.value if source else None,
    }


def serialize_annotated(essays: Iterable[AnnotatedEssay], stream: IO[str]) -> None:
    for a in essays:
        stream.write(json.dumps(_essay_record(a.essay, a.moves, a.source), ensure_ascii=False))
        stream.write("\n")


def serialize_essays(essays: Iterable[Essay], stream: IO[str]) -> None:
    for e in essays:
        stream.write(json.dumps(_essay_record(e, None, None), ensure_ascii=False))
        stream.write("\n")


def _parse_essay_fields(obj: dict, line: int) -> Essay:
    try:
        quality = obj.get("quality_level")
        return Essay(
            essay_id=str(obj["essay_id"]),
            learner_id=str(obj["learner_id"]),
            wave=int(obj["wave"]),
            text=obj["text"],
            quality_level=QualityLevel(quality) if quality is not None else None,
        )
    except KeyError as exc:
        raise CorpusFormatError(f"missing field {exc.args[0]!r}", line) from exc
    except (TypeError, ValueError) as exc:
        raise CorpusFormatError(str(exc), line) from exc


def _parse_record(raw: str, line: int) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"invalid JSON: {exc.msg}", line) from exc
    if not isinstance(obj, dict):
        raise CorpusFormatError("record is not a JSON object", line)
    return obj


def parse_corpus(stream: IO[str]) -> list[AnnotatedEssay]:
    """Parse annotated JSON-lines records, enforcing every invariant.

    Raises CorpusFormatError with the offending line number; span-invariant
    violations additionally name the essay_id and the broken span pair.
    """
    out: list[AnnotatedEssay] = []
    for line_no, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        obj = _parse_record(raw, line_no)
        essay = _parse_essay_fields(obj, line_no)
        if obj.get("moves") is None:
            raise CorpusFormatError(f"essay {essay.essay_id!r}: record has no moves", line_no)
        moves = []
        for k, m in enumerate(obj["moves"]):
            try:
                label = MoveLabel(m["label"])
            except ValueError:
                raise CorpusFormatError(
                    f"essay {essay.essay_id!r}: unknown label {m.get('label')!r}", line_no
                ) from None
            except (KeyError, TypeError) as exc:
                raise CorpusFormatError(f"essay {essay.essay_id!r}: malformed move {k}", line_no) from exc
            try:
                span = Span(int(m["start"]), int(m["end"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"essay {essay.essay_id!r}: malformed move {k}: {exc}", line_no) from exc
            moves.append(AnnotatedMove(span, label))
        source = Source(obj["source"]) if obj.get("source") else Source.HUMAN
        annotated = AnnotatedEssay(essay, tuple(moves), source)
        violations = validate_annotated(annotated)
        if violations:
            raise CorpusFormatError(f"essay {essay.essay_id!r}: {violations[0]}", line_no)
        out.append(annotated)
    return out


def parse_essays(stream: IO[str]) -> list[Essay]:
    """Parse records as bare essays; `moves` may be null and is ignored."""
    out = []
    for line_no, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        out.append(_parse_essay_fields(_parse_record(raw, line_no), line_no))
    return out


def strip_annotations(annotated: AnnotatedEssay) -> Essay:
    return annotated.essay


def _split_sizes(n: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    # floor each share, then hand the remainder to the largest fractional parts
    raw = [r * n for r in ratios]
    sizes = [int(x) for x in raw]
    remainder = n - sum(sizes)
    order = sorted(range(3), key=lambda i: raw[i] - sizes[i], reverse=True)
    for i in range(remainder):
        sizes[order[i % 3]] += 1
    return tuple(sizes)  # type: ignore[return-value]


def split_corpus(
    essays: Sequence[AnnotatedEssay],
    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15),
    seed: int = 0,
    by_learner: bool = False,
) -> CorpusSplit:
    """Partition essays into training/validation/application sets.

    Deterministic for a fixed seed regardless of input order (records are
    keyed by essay_id before shuffling). The application set carries essays
    with gold annotations stripped. `by_learner` keeps each learner's essays
    in a single set (sizes then only approximate the ratios).
    """
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    if len(essays) < 3:
        raise ValueError(f"need at least 3 essays to populate all sets, got {len(essays)}")
    seen: set[str] = set()
    for a in essays:
        if a.essay.essay_id in seen:
            raise ValueError(f"duplicate essay_id {a.essay.essay_id!r}")
        seen.add(a.essay.essay_id)

    rng = random.Random(seed)
    ordered = sorted(essays, key=lambda a: a.essay.essay_id)
    n_train, n_val, n_app = _split_sizes(len(ordered), ratios)

    if not by_learner:
        rng.shuffle(ordered)
        train = ordered[:n_train]
        val = ordered[n_train : n_train + n_val]
        app = ordered[n_train + n_val :]
    else:
        groups: dict[str, list[AnnotatedEssay]] = {}
        for a in ordered:
            groups.setdefault(a.essay.learner_id, []).append(a)
        learner_ids = sorted(groups)
        rng.shuffle(learner_ids)
        train, val, app = [], [], []
        targets = [n_train, n_val, n_app]
        buckets = [train, val, app]
        for lid in learner_ids:
            # drop each learner into the bucket farthest below its target
            deficits = [targets[i] - len(buckets[i]) for i in range(3)]
            buckets[deficits.index(max(deficits))].extend(groups[lid])

    return CorpusSplit(
        training=tuple(train),
        validation=tuple(val),
        application=tuple(strip_annotations(a) for a in app),
    )


def with_quality(annotated: AnnotatedEssay, quality: QualityLevel | None) -> AnnotatedEssay:
    return AnnotatedEssay(replace(annotated.essay, quality_level=quality), annotated.moves, annotated.source)
