"""Document/summary scoring: accuracy form plus generalized variants.

The accuracy form counts exact top-1 reconstructions of masked tokens with
and without the summary as context; generalized variants accumulate the
difference of the gold token's logit, probability, or log probability.
All counts are micro-averaged: one global total over every masked token of
the whole document, never per-sentence averages.
"""

from __future__ import annotations

import enum
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .backends.base import MaskedLMBackend, PredictionOutcome
from .errors import BlancError, NoMaskableTokens
from .masking import ClozePair, MaskingPolicy, build_cloze_pair, mask_positions
from .textprep import prepare_document, tokenize


class ScoreVariant(enum.Enum):
    ACCURACY = "accuracy"
    LOGIT = "logit"
    PROBABILITY = "probability"
    LOG_PROBABILITY = "log_probability"


def _gold_value(outcome: PredictionOutcome, variant: ScoreVariant) -> float:
    if variant is ScoreVariant.LOGIT:
        return outcome.gold_logit
    if variant is ScoreVariant.PROBABILITY:
        return outcome.gold_prob
    return outcome.gold_logprob


@dataclass(frozen=True)
class BlancResult:
    """Score plus the raw counts it was computed from.

    n_help/n_base are exact top-1 reconstruction counts regardless of
    variant; ``score`` is (n_help - n_base)/n_total for ACCURACY and the
    mean gold-value difference otherwise.
    """

    variant: ScoreVariant
    n_help: int
    n_base: int
    n_total: int
    score: float


def build_cloze_pairs(
    document: str, summary: str, policy: MaskingPolicy, backend: MaskedLMBackend
) -> list[ClozePair]:
    """All cloze pairs for a document: sentences x offsets, empty passes dropped."""
    vocab = backend.vocabulary
    sentences = prepare_document(document, vocab)
    summary_tokens = tokenize(summary, vocab)
    pairs: list[ClozePair] = []
    for sentence in sentences:
        for offset in range(1, policy.gap + 1):
            positions = mask_positions(sentence, policy, offset)
            if not positions:
                continue
            pairs.append(
                build_cloze_pair(
                    summary_tokens,
                    sentence,
                    positions,
                    mask_id=vocab.mask_id,
                    filler_id=vocab.filler_id,
                    max_len=vocab.max_len,
                    special_budget=vocab.special_budget,
                )
            )
    return pairs


def score_pair(
    document: str,
    summary: str,
    policy: MaskingPolicy,
    variant: ScoreVariant,
    backend: MaskedLMBackend,
) -> BlancResult:
    """Score one document/summary pair.

    Raises NoMaskableTokens when the policy leaves nothing to mask (all
    tokens below the length thresholds, or an empty document).
    """
    pairs = build_cloze_pairs(document, summary, policy, backend)
    if not pairs:
        raise NoMaskableTokens("no sentence has a maskable token under this policy")

    # When base and help sides are identical (empty summary) run one
    # inference and share it: the difference is then exactly zero.
    inputs = []
    sides: list[tuple[int, int]] = []
    for pair in pairs:
        base_idx = len(inputs)
        inputs.append(pair.base_input())
        if pair.sides_identical:
            sides.append((base_idx, base_idx))
        else:
            inputs.append(pair.help_input())
            sides.append((base_idx, base_idx + 1))
    outcomes = backend.predict(inputs)

    n_help = 0
    n_base = 0
    n_total = 0
    delta_sum = 0.0
    for pair, (base_idx, help_idx) in zip(pairs, sides):
        base_outs = outcomes[base_idx]
        help_outs = outcomes[help_idx]
        for gold, b_out, h_out in zip(pair.gold_ids, base_outs, help_outs):
            n_total += 1
            if h_out.top_id == gold:
                n_help += 1
            if b_out.top_id == gold:
                n_base += 1
            delta_sum += _gold_value(h_out, variant) - _gold_value(b_out, variant)

    if variant is ScoreVariant.ACCURACY:
        score = (n_help - n_base) / n_total
    else:
        score = delta_sum / n_total
    return BlancResult(variant=variant, n_help=n_help, n_base=n_base, n_total=n_total, score=score)


@dataclass(frozen=True)
class BatchEntry:
    """Outcome of one pair inside a batch: a result or a recorded error."""

    pair_id: str
    result: BlancResult | None = None
    error: str | None = None
    message: str | None = None


class _SerializedBackend(MaskedLMBackend):
    """Wraps a single-threaded backend with a lock so batches can fan out."""

    def __init__(self, inner: MaskedLMBackend):
        self._inner = inner
        self._lock = threading.Lock()

    @property
    def vocabulary(self):
        return self._inner.vocabulary

    def _predict_impl(self, inputs):
        raise NotImplementedError

    def predict(self, inputs):
        with self._lock:
            return self._inner.predict(inputs)


def score_batch(
    pairs: Sequence[tuple[str, str, str]],
    policy: MaskingPolicy,
    variant: ScoreVariant,
    backend: MaskedLMBackend,
    parallelism: int = 1,
) -> list[BatchEntry]:
    """Score (id, document, summary) triples; output order matches input.

    Per-pair errors are recorded without aborting the batch, and results
    are identical to sequential score_pair calls at any parallelism.
    """
    ids = [p[0] for p in pairs]
    if len(set(ids)) != len(ids):
        raise ValueError("pair ids must be unique")
    worker_backend = backend if backend.thread_safe else _SerializedBackend(backend)

    def one(item: tuple[str, str, str]) -> BatchEntry:
        pair_id, document, summary = item
        try:
            result = score_pair(document, summary, policy, variant, worker_backend)
            return BatchEntry(pair_id=pair_id, result=result)
        except BlancError as exc:
            return BatchEntry(pair_id=pair_id, error=type(exc).__name__, message=str(exc))

    if parallelism <= 1 or len(pairs) <= 1:
        return [one(p) for p in pairs]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, pairs))


def combined_square_score(score_by_gap: Mapping[int, float], gaps: Iterable[int] = (2, 6)) -> float:
    """Experimental combined metric: sum of squared scores over mask gaps.

    Squaring discards the sign of each component, so direction information
    from negative scores is lost; treat comparisons of this metric with
    care.
    """
    try:
        return sum(score_by_gap[g] ** 2 for g in gaps)
    except KeyError as exc:
        raise ValueError(f"missing score for gap {exc}") from None
