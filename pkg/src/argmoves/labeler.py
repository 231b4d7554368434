"""Candidate-move classification over full-essay context.

Three interchangeable backends produce one 9-way label distribution per
candidate:

* ``baseline`` — a native linear softmax classifier over hand features,
  trained by full-batch gradient descent on cross-entropy.
* ``remote``   — an HTTP service speaking the wire protocol below (the
  contextual-encoder service lives in a separate package).
* ``oracle``   — emits gold candidate labels as one-hot distributions;
  used for end-to-end identity testing.

Wire protocol (HTTP POST, JSON, UTF-8)::

    request  {"request_id": str, "essay_id": str, "segments": [str],
              "boundary_token": "[SEP]"}
    response {"request_id": str, "distributions": [{<label>: float x 9}]}

Error responses carry {"error": str} with a non-2xx status. Responses are
matched to requests by request_id, never by arrival order.
"""
from __future__ import annotations

import json
import math
import time
import urllib.error
import urllib.request
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .corpus import (
    CANDIDATE_LABEL_ORDER,
    AnnotatedMove,
    CandidateLabel,
    Essay,
    parse_corpus,
)
from .segmenter import CandidateMove, align_gold

BOUNDARY_TOKEN = "[SEP]"
NUM_LABELS = len(CANDIDATE_LABEL_ORDER)

# discourse markers checked at candidate start (fallback default; training
# configs usually pass the lexicon that matches their corpus)
DEFAULT_LEXICON: tuple[str, ...] = (
    "however",
    "because",
    "but",
    "some may say",
    "in conclusion",
    "first",
)

_CHAR_SCALE = 100.0
_TOKEN_SCALE = 20.0
_FIXED_FEATURES = 5  # position, char len, token len, first-line, sentence-final


class BackendError(RuntimeError):
    """Remote backend unreachable or returned an error response."""


class BackendProtocolError(BackendError):
    """Remote backend violated the wire-protocol contract."""


@dataclass(frozen=True)
class ModifiedEssay:
    """Essay text reorganized as boundary-separated candidate segments."""

    essay_id: str
    segments: tuple[tuple[CandidateMove, str], ...]

    @property
    def candidates(self) -> list[CandidateMove]:
        return [c for c, _ in self.segments]

    @property
    def texts(self) -> list[str]:
        return [t for _, t in self.segments]


@dataclass(frozen=True)
class LabelDistribution:
    probabilities: dict[CandidateLabel, float]

    def __post_init__(self):
        missing = [l.value for l in CANDIDATE_LABEL_ORDER if l not in self.probabilities]
        if missing:
            raise ValueError(f"distribution missing labels: {missing}")
        total = sum(self.probabilities.values())
        if not math.isfinite(total) or abs(total - 1.0) > 1e-6:
            raise ValueError(f"distribution sums to {total!r}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.probabilities[l] for l in CANDIDATE_LABEL_ORDER])

    @staticmethod
    def from_array(probs: Sequence[float]) -> "LabelDistribution":
        arr = np.asarray(probs, dtype=float)
        arr = arr / arr.sum()
        return LabelDistribution({l: float(p) for l, p in zip(CANDIDATE_LABEL_ORDER, arr)})

    @staticmethod
    def one_hot(label: CandidateLabel) -> "LabelDistribution":
        return LabelDistribution({l: 1.0 if l is label else 0.0 for l in CANDIDATE_LABEL_ORDER})


class BackendKind(str, Enum):
    BASELINE = "baseline"
    REMOTE = "remote"
    ORACLE = "oracle"


@dataclass(frozen=True)
class BackendDescriptor:
    kind: BackendKind
    model_path: str | None = None      # baseline
    endpoint: str | None = None        # remote
    timeout: float = 10.0
    retries: int = 2
    concurrency: int = 4
    max_context_chars: int | None = None
    gold_path: str | None = None       # oracle

    def __post_init__(self):
        required = {
            BackendKind.BASELINE: self.model_path,
            BackendKind.REMOTE: self.endpoint,
            BackendKind.ORACLE: self.gold_path,
        }
        if required[self.kind] is None:
            raise ValueError(f"backend kind {self.kind.value!r} missing its required field")


def build_context(essay: Essay, candidates: Sequence[CandidateMove]) -> ModifiedEssay:
    """Pair each candidate with its text; candidates must partition the essay."""
    if not candidates:
        raise ValueError("no candidates")
    pos = 0
    for c in candidates:
        if c.span.start != pos:
            raise ValueError(f"candidates do not partition text: gap/overlap at offset {pos}")
        pos = c.span.end
    if pos != len(essay.text):
        raise ValueError(f"candidates cover {pos} of {len(essay.text)} characters")
    return ModifiedEssay(
        essay.essay_id,
        tuple((c, c.span.slice(essay.text)) for c in candidates),
    )


def predict_labels(distributions: Sequence[LabelDistribution]) -> list[CandidateLabel]:
    """Per-candidate argmax; ties break by the fixed label order, none last."""
    out = []
    for dist in distributions:
        best, best_p = CANDIDATE_LABEL_ORDER[0], dist.probabilities[CANDIDATE_LABEL_ORDER[0]]
        for label in CANDIDATE_LABEL_ORDER[1:]:
            p = dist.probabilities[label]
            if p > best_p:
                best, best_p = label, p
        out.append(best)
    return out


# ---------------------------------------------------------------------------
# feature extraction
# ---------------------------------------------------------------------------


def feature_dim(lexicon: Sequence[str]) -> int:
    return _FIXED_FEATURES + len(lexicon) + NUM_LABELS


def _sentence_final(segment: str) -> bool:
    stripped = segment.rstrip()
    while stripped and stripped[-1] in "\"')]}’”»":
        stripped = stripped[:-1]
    return bool(stripped) and stripped[-1] in ".!?"


def extract_row(
    text: str,
    context: ModifiedEssay,
    i: int,
    lexicon: Sequence[str],
    prev_label: CandidateLabel | None,
) -> np.ndarray:
    cand, segment = context.segments[i]
    row = np.zeros(feature_dim(lexicon))
    m = len(context.segments)
    row[0] = (cand.index - 1) / max(1, m - 1)
    row[1] = len(segment) / _CHAR_SCALE
    row[2] = len(segment.split()) / _TOKEN_SCALE
    first_nl = text.find("\n")
    row[3] = 1.0 if (cand.span.start < first_nl if first_nl != -1 else i == 0) else 0.0
    row[4] = 1.0 if _sentence_final(segment) else 0.0
    lead = segment.lstrip().lower()
    for k, marker in enumerate(lexicon):
        if lead.startswith(marker.lower()):
            row[_FIXED_FEATURES + k] = 1.0
    if prev_label is not None:
        row[_FIXED_FEATURES + len(lexicon) + CANDIDATE_LABEL_ORDER.index(prev_label)] = 1.0
    return row


# ---------------------------------------------------------------------------
# baseline model
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 0.3
    l2: float = 0.0
    seed: int = 0


@dataclass
class BaselineModel:
    weights: np.ndarray  # (num_labels, feature_dim)
    bias: np.ndarray     # (num_labels,)
    lexicon: tuple[str, ...]
    epochs: int = 0
    learning_rate: float = 0.0
    l2: float = 0.0
    seed: int = 0
    loss_history: tuple[float, ...] = ()

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not np.all(np.isfinite(self.bias)):
            raise ValueError("model weights must be finite")
        if self.weights.shape != (NUM_LABELS, feature_dim(self.lexicon)):
            raise ValueError(f"weight shape {self.weights.shape} does not match lexicon")

    @property
    def final_loss(self) -> float | None:
        return self.loss_history[-1] if self.loss_history else None

    def save(self, path: str) -> None:
        payload = {
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "lexicon": list(self.lexicon),
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "l2": self.l2,
            "seed": self.seed,
            "loss_history": list(self.loss_history),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @staticmethod
    def load(path: str) -> "BaselineModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return BaselineModel(
            weights=np.array(payload["weights"]),
            bias=np.array(payload["bias"]),
            lexicon=tuple(payload["lexicon"]),
            epochs=payload["epochs"],
            learning_rate=payload["learning_rate"],
            l2=payload["l2"],
            seed=payload["seed"],
            loss_history=tuple(payload["loss_history"]),
        )


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def train_baseline(
    pairs: Sequence[tuple[Essay, Sequence[CandidateMove], Sequence[CandidateLabel]]],
    config: TrainConfig | None = None,
    lexicon: Sequence[str] = DEFAULT_LEXICON,
) -> BaselineModel:
    """Fit the linear softmax head by full-batch gradient descent.

    Previous-label features are teacher-forced from the gold labels. The
    model initializes at zero, so zero epochs returns the uniform
    (all-zero-weight) classifier.
    """
    config = config or TrainConfig()
    if not pairs:
        raise ValueError("no training pairs")
    rows, targets = [], []
    for essay, candidates, labels in pairs:
        if len(candidates) != len(labels):
            raise ValueError(
                f"essay {essay.essay_id!r}: {len(labels)} labels for {len(candidates)} candidates"
            )
        context = build_context(essay, list(candidates))
        for i in range(len(candidates)):
            prev = labels[i - 1] if i > 0 else None
            rows.append(extract_row(essay.text, context, i, lexicon, prev))
            targets.append(CANDIDATE_LABEL_ORDER.index(labels[i]))
    x = np.stack(rows)
    y = np.zeros((len(targets), NUM_LABELS))
    y[np.arange(len(targets)), targets] = 1.0

    dim = feature_dim(lexicon)
    w = np.zeros((NUM_LABELS, dim))
    b = np.zeros(NUM_LABELS)
    n = len(targets)
    losses = []
    for _ in range(config.epochs):
        probs = _softmax(x @ w.T + b)
        grad_w = (probs - y).T @ x / n + config.l2 * w
        grad_b = (probs - y).mean(axis=0)
        w -= config.learning_rate * grad_w
        b -= config.learning_rate * grad_b
        probs = _softmax(x @ w.T + b)
        ce = -np.log(np.clip((probs * y).sum(axis=1), 1e-300, None)).mean()
        losses.append(float(ce + 0.5 * config.l2 * float((w * w).sum())))

    return BaselineModel(
        weights=w,
        bias=b,
        lexicon=tuple(lexicon),
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        l2=config.l2,
        seed=config.seed,
        loss_history=tuple(losses),
    )


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------


class BaselineBackend:
    def __init__(self, model: BaselineModel):
        self.model = model

    def classify_context(self, context: ModifiedEssay) -> list[LabelDistribution]:
        text = "".join(context.texts)
        prev: CandidateLabel | None = None
        out = []
        for i in range(len(context.segments)):
            row = extract_row(text, context, i, self.model.lexicon, prev)
            probs = _softmax(self.model.weights @ row + self.model.bias)
            dist = LabelDistribution.from_array(probs)
            out.append(dist)
            prev = predict_labels([dist])[0]
        return out


class OracleBackend:
    """Looks up gold moves by essay_id and emits their candidate labels."""

    def __init__(self, gold: dict[str, Sequence[AnnotatedMove]]):
        self.gold = gold

    def classify_context(self, context: ModifiedEssay) -> list[LabelDistribution]:
        if context.essay_id not in self.gold:
            raise BackendError(f"oracle has no gold annotation for essay {context.essay_id!r}")
        labels = align_gold(context.candidates, list(self.gold[context.essay_id]))
        return [LabelDistribution.one_hot(label) for label in labels]


class RemoteBackend:
    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        retries: int = 2,
        concurrency: int = 4,
        max_context_chars: int | None = None,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.concurrency = max(1, concurrency)
        self.max_context_chars = max_context_chars

    def _post(self, payload: dict) -> dict:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    return json.loads(response.read().decode("utf-8"))
            except urllib.error.HTTPError as exc:
                detail = ""
                try:
                    detail = json.loads(exc.read().decode("utf-8")).get("error", "")
                except Exception:
                    pass
                if exc.code < 500:
                    raise BackendError(f"backend rejected request ({exc.code}): {detail}") from exc
                last_error = BackendError(f"backend error ({exc.code}): {detail}")
            except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
                last_error = BackendError(f"backend unreachable: {exc}")
            if attempt < self.retries:
                time.sleep(0.1 * 2**attempt)
        raise last_error  # type: ignore[misc]

    def classify_context(self, context: ModifiedEssay) -> list[LabelDistribution]:
        if self.max_context_chars is not None:
            total = sum(len(t) for t in context.texts)
            if total > self.max_context_chars:
                return _classify_windowed(self, context, self.max_context_chars)
        request_id = f"{context.essay_id}:{uuid.uuid4().hex[:8]}"
        payload = {
            "request_id": request_id,
            "essay_id": context.essay_id,
            "segments": context.texts,
            "boundary_token": BOUNDARY_TOKEN,
        }
        response = self._post(payload)
        if response.get("request_id") != request_id:
            raise BackendProtocolError(
                f"response request_id {response.get('request_id')!r} does not echo {request_id!r}"
            )
        distributions = response.get("distributions")
        if not isinstance(distributions, list) or len(distributions) != len(context.segments):
            got = len(distributions) if isinstance(distributions, list) else "no"
            raise BackendProtocolError(
                f"response count mismatch: {got} distributions for {len(context.segments)} segments"
            )
        out = []
        for k, dist in enumerate(distributions):
            try:
                out.append(
                    LabelDistribution({l: float(dist[l.value]) for l in CANDIDATE_LABEL_ORDER})
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise BackendProtocolError(f"segment {k}: invalid distribution: {exc}") from exc
        return out


def _build_windows(context: ModifiedEssay, max_chars: int) -> list[tuple[int, int]]:
    """Overlapping [start, end) segment ranges, each within the char budget."""
    lengths = [len(t) for t in context.texts]
    m = len(lengths)
    windows = []
    start = 0
    while start < m:
        end = start
        total = 0
        while end < m and (total + lengths[end] <= max_chars or end == start):
            total += lengths[end]
            end += 1
        windows.append((start, end))
        if end >= m:
            break
        start = max(start + 1, start + (end - start) // 2)  # ~50% overlap
    return windows


def _classify_windowed(backend, context: ModifiedEssay, max_chars: int) -> list[LabelDistribution]:
    windows = _build_windows(context, max_chars)
    # each candidate reads its label from the window whose center is nearest
    assignment = []
    for i in range(len(context.segments)):
        best, best_dist = None, None
        for w, (a, b) in enumerate(windows):
            if a <= i < b:
                d = abs(i - (a + b - 1) / 2)
                if best is None or d < best_dist:
                    best, best_dist = w, d
        assignment.append(best)
    results: dict[int, list[LabelDistribution]] = {}
    for w in sorted(set(assignment)):
        a, b = windows[w]
        sub = ModifiedEssay(context.essay_id, context.segments[a:b])
        results[w] = backend.classify_context(sub)
    out = []
    for i, w in enumerate(assignment):
        a, _ = windows[w]
        out.append(results[w][i - a])
    return out


def resolve_backend(descriptor: BackendDescriptor):
    if descriptor.kind is BackendKind.BASELINE:
        return BaselineBackend(BaselineModel.load(descriptor.model_path))
    if descriptor.kind is BackendKind.REMOTE:
        return RemoteBackend(
            descriptor.endpoint,
            timeout=descriptor.timeout,
            retries=descriptor.retries,
            concurrency=descriptor.concurrency,
            max_context_chars=descriptor.max_context_chars,
        )
    with open(descriptor.gold_path, encoding="utf-8") as fh:
        gold = {a.essay.essay_id: a.moves for a in parse_corpus(fh)}
    return OracleBackend(gold)


def classify(backend, context: ModifiedEssay) -> list[LabelDistribution]:
    """One distribution per candidate, order preserved.

    `backend` may be a BackendDescriptor or an already-resolved backend
    object exposing classify_context.
    """
    if isinstance(backend, BackendDescriptor):
        backend = resolve_backend(backend)
    distributions = backend.classify_context(context)
    if len(distributions) != len(context.segments):
        raise BackendProtocolError(
            f"response count mismatch: {len(distributions)} distributions "
            f"for {len(context.segments)} segments"
        )
    return distributions


def classify_many(backend, contexts: Sequence[ModifiedEssay], jobs: int = 1) -> list[list[LabelDistribution]]:
    """Classify several essays, preserving input order regardless of completion order."""
    if isinstance(backend, BackendDescriptor):
        backend = resolve_backend(backend)
    if jobs <= 1:
        return [classify(backend, ctx) for ctx in contexts]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda ctx: classify(backend, ctx), contexts))
