"""Argumentative-move annotation pipeline and analysis toolkit."""

from .corpus import (
    AnnotatedEssay,
    AnnotatedMove,
    CandidateLabel,
    CorpusSplit,
    Essay,
    MoveLabel,
    QualityLevel,
    Source,
    Span,
    parse_corpus,
    parse_essays,
    serialize_annotated,
    serialize_essays,
    split_corpus,
    validate_annotated,
)
from .evaluation import EvalReport, MatchCounts, evaluate_candidate_labels, match_moves, prf
from .labeler import (
    BackendDescriptor,
    BackendKind,
    BaselineModel,
    LabelDistribution,
    ModifiedEssay,
    TrainConfig,
    build_context,
    classify,
    predict_labels,
    train_baseline,
)
from .segmenter import CandidateMove, SegmentationRules, align_gold, segment_candidates
from .stats import (
    AnovaResult,
    ManovaResult,
    MixedModelFit,
    MoveRatios,
    bonferroni,
    development_analysis,
    fit_random_intercept,
    manova_wilks,
    move_ratios,
    one_way_anova,
    quality_analysis,
)
from .synthgen import GeneratorConfig, SplitMix64, generate_corpus
from .verifier import MergeTrace, merge_invalid

__version__ = "0.1.0"
