"""Reference-free summary quality scoring with masked-LM cloze tests."""

from .analysis import (
    AnnotationRecord,
    AnnotationSet,
    CorrelationResult,
    ErrorAnnotationRecord,
    ErrorAnnotationSet,
    ErrorType,
    Quality,
    SplitRecord,
    enumerate_splits,
    error_correlation,
    outperform_fraction,
    pearson,
    spearman,
    split_correlation_analysis,
)
from .backends import (
    MaskedLMBackend,
    OnnxBackend,
    PredictionOutcome,
    UnigramBackend,
    Vocabulary,
    get_backend,
    load_bundle,
)
from .corruption import (
    EntityKind,
    SwapReport,
    SwapTrial,
    extract_entities,
    swap_entity,
    swap_experiment,
)
from .errors import (
    BlancError,
    DegenerateInput,
    EmptyInput,
    InputTooLong,
    MissingScores,
    ModelLoadError,
    NoMaskableTokens,
    NoSwappableEntity,
    SentenceTooLong,
)
from .masking import ClozePair, MaskingPolicy, build_cloze_pair, is_eligible, mask_positions
from .scoring import (
    BatchEntry,
    BlancResult,
    ScoreVariant,
    combined_square_score,
    score_batch,
    score_pair,
)
from .textprep import Sentence, Token, WordRole, split_sentences, tokenize

__version__ = "0.1.0"
