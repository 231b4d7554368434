"""Seeded synthetic gold-annotated corpora.

Essays are built from templated sentences whose leading cue phrase encodes
the move label, so a classifier keyed to the cue lexicon can learn the
corpus, and gold boundaries land exactly on segmenter candidate boundaries
(terminator-final templates, titles ending at the first newline).

Controllable effects:
  * per-label base probabilities,
  * a quality-level shift on counter_claim probability (compensated on
    data so the vector stays a distribution),
  * zero-sum per-wave drifts (data+, counter_claim+, non_argument-, claim
    compensating) for the longitudinal analyses,
  * per-learner propensity offsets giving a true between-individual
    variance component,
  * an internal-split probability that buries a comma inside a move, so
    the move spans two candidates and the first one is gold-labeled none.

Randomness comes from a SplitMix64 generator (documented algorithm,
reproducible across platforms and library versions).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import (
    AnnotatedEssay,
    AnnotatedMove,
    Essay,
    MoveLabel,
    QualityLevel,
    Source,
    Span,
)
from .stats import COUNTED_LABELS

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 PRNG (Steele, Lea & Flood 2014).

    state += 0x9E3779B97F4A7C15
    z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
    z = (z ^ z>>27) * 0x94D049BB133111EB
    output z ^ z>>31
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return self.next_u64() / 2**64

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + int(self.uniform() * (hi - lo + 1))

    def normal(self, mean: float = 0.0, sd: float = 1.0) -> float:
        # Box-Muller; one fresh pair per call keeps the stream position simple
        u1 = max(self.uniform(), 1e-12)
        u2 = self.uniform()
        return mean + sd * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def choice_weighted(self, items, weights) -> object:
        total = sum(weights)
        r = self.uniform() * total
        acc = 0.0
        for item, w in zip(items, weights):
            acc += w
            if r < acc:
                return item
        return items[-1]

    def pick(self, items):
        return items[self.randint(0, len(items) - 1)]


CONTENT_LABELS: tuple[MoveLabel, ...] = (
    MoveLabel.CLAIM,
    MoveLabel.DATA,
    MoveLabel.COUNTER_CLAIM,
    MoveLabel.COUNTER_DATA,
    MoveLabel.REBUTTAL_CLAIM,
    MoveLabel.REBUTTAL_DATA,
    MoveLabel.NON_ARGUMENT,
)

DEFAULT_BASE_PROBS: dict[MoveLabel, float] = {
    MoveLabel.CLAIM: 0.30,
    MoveLabel.DATA: 0.48,
    MoveLabel.COUNTER_CLAIM: 0.05,
    MoveLabel.COUNTER_DATA: 0.02,
    MoveLabel.REBUTTAL_CLAIM: 0.05,
    MoveLabel.REBUTTAL_DATA: 0.02,
    MoveLabel.NON_ARGUMENT: 0.08,
}

DEFAULT_CUES: dict[MoveLabel, tuple[str, ...]] = {
    MoveLabel.CLAIM: ("I believe", "We should agree that", "My view is that"),
    MoveLabel.DATA: ("For example", "Studies show that", "In fact"),
    MoveLabel.COUNTER_CLAIM: ("Some may say", "Opponents argue that", "However some think"),
    MoveLabel.COUNTER_DATA: ("They cite evidence that", "Their support is that"),
    MoveLabel.REBUTTAL_CLAIM: ("But this view is mistaken", "Yet that argument fails"),
    MoveLabel.REBUTTAL_DATA: ("In reality", "The record shows that"),
    MoveLabel.NON_ARGUMENT: ("By the way", "Um well"),
}

# default zero-sum per-wave drifts so renormalization cannot bend the slopes
DEFAULT_TRENDS: dict[MoveLabel, float] = {
    MoveLabel.DATA: 0.006,
    MoveLabel.COUNTER_CLAIM: 0.0025,
    MoveLabel.NON_ARGUMENT: -0.0025,
    MoveLabel.CLAIM: -0.006,
}

DEFAULT_QUALITY_SHIFTS: dict[QualityLevel, float] = {
    QualityLevel.LOW: 0.0,
    QualityLevel.MEDIUM: 0.01,
    QualityLevel.HIGH: 0.04,
}

_WORDS = (
    "school students learning culture music history nature science city money "
    "health children future society freedom knowledge practice balance effort "
    "family weather sports reading travel language habits energy planet growth"
).split()

_TITLE_WORDS = (
    "Cloning Music Testing Homework Uniforms Phones Debate Reading Sports "
    "Technology Environment Friendship"
).split()


@dataclass(frozen=True)
class GeneratorConfig:
    learners: int = 20
    waves: int = 12
    moves_range: tuple[int, int] = (8, 16)
    base_probs: dict[MoveLabel, float] = field(default_factory=lambda: dict(DEFAULT_BASE_PROBS))
    title_prob: float = 0.9
    quality_levels: bool = True
    quality_shift: dict[QualityLevel, float] = field(
        default_factory=lambda: dict(DEFAULT_QUALITY_SHIFTS)
    )
    trends: dict[MoveLabel, float] = field(default_factory=lambda: dict(DEFAULT_TRENDS))
    lexicon: dict[MoveLabel, tuple[str, ...]] = field(default_factory=lambda: dict(DEFAULT_CUES))
    internal_split_prob: float = 0.0
    learner_sd: float = 0.015
    seed: int = 0

    def __post_init__(self):
        if self.learners < 1 or self.waves < 1:
            raise ValueError("need at least one learner and one wave")
        if self.moves_range[0] < 1 or self.moves_range[0] > self.moves_range[1]:
            raise ValueError(f"bad moves_range {self.moves_range}")
        missing = [l.value for l in CONTENT_LABELS if self.base_probs.get(l, 0.0) < 0]
        if missing or abs(sum(self.base_probs.get(l, 0.0) for l in CONTENT_LABELS) - 1.0) > 1e-9:
            raise ValueError("base_probs must be a distribution over the content labels")
        for label in CONTENT_LABELS:
            if not self.lexicon.get(label):
                raise ValueError(f"lexicon missing cue phrases for {label.value}")


def _label_probs(config: GeneratorConfig, wave: int, quality: QualityLevel | None, learner_offset: float):
    probs = {l: config.base_probs.get(l, 0.0) for l in CONTENT_LABELS}
    for label, drift in config.trends.items():
        probs[label] = probs.get(label, 0.0) + drift * (wave - 1)
    if quality is not None:
        shift = config.quality_shift.get(quality, 0.0)
        probs[MoveLabel.COUNTER_CLAIM] += shift
        probs[MoveLabel.DATA] -= shift
    probs[MoveLabel.DATA] += learner_offset
    probs[MoveLabel.CLAIM] -= learner_offset
    # clamp and renormalize (safety net for user configs; defaults are zero-sum)
    floor = 1e-3
    clamped = {l: max(p, floor) for l, p in probs.items()}
    total = sum(clamped.values())
    return {l: p / total for l, p in clamped.items()}


def _sentence(rng: SplitMix64, cue: str, split_inside: bool) -> str:
    body = " ".join(rng.pick(_WORDS) for _ in range(rng.randint(2, 5)))
    if split_inside:
        extra = " ".join(rng.pick(_WORDS) for _ in range(rng.randint(2, 4)))
        body = f"{body}, {extra}"
    ending = rng.choice_weighted(".!?", (0.9, 0.05, 0.05))
    return f"{cue} {body}{ending}"


def _title(rng: SplitMix64) -> str:
    return " ".join(rng.pick(_TITLE_WORDS) for _ in range(rng.randint(2, 4))) + "\n"


def generate_essay(
    config: GeneratorConfig,
    rng: SplitMix64,
    essay_id: str,
    learner_id: str,
    wave: int,
    quality: QualityLevel | None,
    learner_offset: float,
) -> AnnotatedEssay:
    probs = _label_probs(config, wave, quality, learner_offset)
    n_moves = rng.randint(*config.moves_range)
    labels = [rng.choice_weighted(CONTENT_LABELS, [probs[l] for l in CONTENT_LABELS]) for _ in range(n_moves)]
    if not any(l in COUNTED_LABELS for l in labels):
        labels[0] = MoveLabel.DATA

    pieces: list[tuple[str, MoveLabel]] = []
    if rng.uniform() < config.title_prob:
        pieces.append((_title(rng), MoveLabel.TITLE))
    for label in labels:
        cue = rng.pick(config.lexicon[label])
        split_inside = rng.uniform() < config.internal_split_prob
        pieces.append((_sentence(rng, cue, split_inside), label))

    text_parts: list[str] = []
    moves: list[AnnotatedMove] = []
    pos = 0
    for k, (piece, label) in enumerate(pieces):
        if label is not MoveLabel.TITLE and k < len(pieces) - 1:
            piece = piece + " "
        text_parts.append(piece)
        moves.append(AnnotatedMove(Span(pos, pos + len(piece)), label))
        pos += len(piece)

    essay = Essay(essay_id, learner_id, wave, "".join(text_parts), quality)
    return AnnotatedEssay(essay, tuple(moves), Source.HUMAN)


def generate_corpus(config: GeneratorConfig) -> list[AnnotatedEssay]:
    """Deterministic corpus of learners x waves essays for a fixed seed."""
    rng = SplitMix64(config.seed)
    corpus = []
    for l in range(1, config.learners + 1):
        learner_id = f"L{l:04d}"
        learner_offset = rng.normal(0.0, config.learner_sd) if config.learner_sd > 0 else 0.0
        for wave in range(1, config.waves + 1):
            quality = None
            if config.quality_levels:
                quality = (QualityLevel.LOW, QualityLevel.MEDIUM, QualityLevel.HIGH)[rng.randint(0, 2)]
            essay_id = f"{learner_id}W{wave:02d}"
            corpus.append(
                generate_essay(config, rng, essay_id, learner_id, wave, quality, learner_offset)
            )
    return corpus


def separable_config(seed: int = 0, learners: int = 20, waves: int = 6) -> GeneratorConfig:
    """One unique cue per label, no internal splits: labels are recoverable
    from candidate-start markers alone (for baseline learnability tests)."""
    return GeneratorConfig(
        learners=learners,
        waves=waves,
        lexicon={label: (cues[0],) for label, cues in DEFAULT_CUES.items()},
        internal_split_prob=0.0,
        trends={},
        quality_shift={},
        learner_sd=0.0,
        seed=seed,
    )


def contextual_config(seed: int = 0, learners: int = 30, waves: int = 6) -> GeneratorConfig:
    """Cue variants plus frequent internal splits: the label of a move's
    final candidate is only visible from surrounding context."""
    return GeneratorConfig(
        learners=learners,
        waves=waves,
        internal_split_prob=0.35,
        trends={},
        quality_shift={},
        learner_sd=0.0,
        seed=seed,
    )


def effect_config(seed: int = 0, learners: int = 100, waves: int = 12) -> GeneratorConfig:
    """Default quality and trend effects switched on (power analyses)."""
    return GeneratorConfig(learners=learners, waves=waves, seed=seed)


def null_config(seed: int = 0, learners: int = 100, waves: int = 12) -> GeneratorConfig:
    """No quality effect, no trends (size analyses)."""
    return GeneratorConfig(
        learners=learners, waves=waves, trends={}, quality_shift={}, seed=seed
    )


# ---------------------------------------------------------------------------
# plain-text config files (TOML-style key = value with [sections])
# ---------------------------------------------------------------------------


def parse_generator_config(text: str) -> GeneratorConfig:
    """Parse the documented key=value generator config format.

    Top-level keys: seed, learners, waves, moves_min, moves_max, title_prob,
    internal_split_prob, learner_sd, quality_levels,
    quality_shift_medium, quality_shift_high.
    Sections: [base_probs] and [trends] hold label = number lines;
    [lexicon] holds label = cue|cue|... lines.
    """
    top: dict[str, str] = {}
    sections: dict[str, dict[str, str]] = {}
    current: dict[str, str] | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1].strip(), {})
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        (current if current is not None else top)[key] = value

    def num(key: str, default: float) -> float:
        return float(top[key]) if key in top else default

    def flag(key: str, default: bool) -> bool:
        return top[key].lower() in ("1", "true", "yes") if key in top else default

    defaults = GeneratorConfig()
    base_probs = dict(defaults.base_probs)
    for key, value in sections.get("base_probs", {}).items():
        base_probs[MoveLabel(key)] = float(value)
    trends: dict[MoveLabel, float] = (
        {MoveLabel(k): float(v) for k, v in sections["trends"].items()}
        if "trends" in sections
        else dict(defaults.trends)
    )
    lexicon = dict(defaults.lexicon)
    for key, value in sections.get("lexicon", {}).items():
        lexicon[MoveLabel(key)] = tuple(s.strip() for s in value.split("|") if s.strip())

    quality_shift = dict(defaults.quality_shift)
    if "quality_shift_medium" in top:
        quality_shift[QualityLevel.MEDIUM] = float(top["quality_shift_medium"])
    if "quality_shift_high" in top:
        quality_shift[QualityLevel.HIGH] = float(top["quality_shift_high"])

    return GeneratorConfig(
        learners=int(num("learners", defaults.learners)),
        waves=int(num("waves", defaults.waves)),
        moves_range=(
            int(num("moves_min", defaults.moves_range[0])),
            int(num("moves_max", defaults.moves_range[1])),
        ),
        base_probs=base_probs,
        title_prob=num("title_prob", defaults.title_prob),
        quality_levels=flag("quality_levels", defaults.quality_levels),
        quality_shift=quality_shift,
        trends=trends,
        lexicon=lexicon,
        internal_split_prob=num("internal_split_prob", defaults.internal_split_prob),
        learner_sd=num("learner_sd", defaults.learner_sd),
        seed=int(num("seed", defaults.seed)),
    )
