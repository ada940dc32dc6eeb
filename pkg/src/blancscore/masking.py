"""Maskable-position selection and aligned base/help cloze construction.

Every eligible token is covered exactly once when the per-offset position
sets are unioned over offsets 1..gap (mask_width 1), which is what makes
the downstream counts micro-averages over all masked tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import SentenceTooLong
from .textprep import Sentence, Token, WordRole


@dataclass(frozen=True)
class MaskingPolicy:
    """Masking parameter bundle.

    gap: mask every gap-th eligible position per offset pass (6 matches the
        model's pretraining masking rate; 2 extracts the most help from a
        summary).
    min_word_len: whole words shorter than this are never masked.
    min_start_len: word-start pieces shorter than this are never masked
        (0 = always maskable).
    min_cont_len: word-continuation pieces shorter than this are never
        masked (a huge value disables them entirely).
    mask_width: also mask up to this many neighboring eligible tokens
        after each selected one.
    """

    gap: int = 6
    min_word_len: int = 4
    min_start_len: int = 0
    min_cont_len: int = 1000
    mask_width: int = 1

    def __post_init__(self) -> None:
        if self.gap < 1:
            raise ValueError(f"gap must be >= 1, got {self.gap}")
        if self.mask_width < 1:
            raise ValueError(f"mask_width must be >= 1, got {self.mask_width}")
        for name in ("min_word_len", "min_start_len", "min_cont_len"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


RECOMMENDED_GAP = 2


def is_eligible(token: Token, policy: MaskingPolicy) -> bool:
    """Whether the masking guard permits masking this token."""
    if token.word_role is WordRole.WHOLE_WORD:
        return token.char_length >= policy.min_word_len
    if token.word_role is WordRole.WORD_START:
        return token.char_length >= policy.min_start_len
    return token.char_length >= policy.min_cont_len


def mask_positions(sentence: Sentence, policy: MaskingPolicy, offset: int) -> list[int]:
    """Select the 0-based token positions to mask for one offset pass.

    With 1-based token index i = position + 1, a position is selected when
    its token is eligible and i is congruent to ``offset`` modulo the gap.
    A mask_width of w additionally selects up to w-1 following positions,
    skipping (not replacing) ineligible neighbors.
    """
    if not 1 <= offset <= policy.gap:
        raise ValueError(f"offset must be in 1..{policy.gap}, got {offset}")
    eligible = [is_eligible(tok, policy) for tok in sentence.tokens]
    selected: set[int] = set()
    for pos, ok in enumerate(eligible):
        if not ok or (pos + 1 - offset) % policy.gap != 0:
            continue
        selected.add(pos)
        for extra in range(pos + 1, min(pos + policy.mask_width, len(eligible))):
            if eligible[extra]:
                selected.add(extra)
    return sorted(selected)


@dataclass(frozen=True)
class ClozePair:
    """Aligned base/help model inputs for one sentence and offset pass.

    Both prefixes have the same token count, so each sentence token sits at
    the same absolute position in the base and help inputs; the summary's
    contribution is the only difference between the two sides.
    """

    base_prefix: tuple[int, ...]
    help_prefix: tuple[int, ...]
    sentence_tokens: tuple[int, ...]
    masked_positions: tuple[int, ...]
    gold_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        assert len(self.base_prefix) == len(self.help_prefix)
        assert len(self.masked_positions) == len(self.gold_ids)

    def base_input(self) -> "ClozeInput":
        return ClozeInput(self.base_prefix, self.sentence_tokens, self.masked_positions, self.gold_ids)

    def help_input(self) -> "ClozeInput":
        return ClozeInput(self.help_prefix, self.sentence_tokens, self.masked_positions, self.gold_ids)

    @property
    def sides_identical(self) -> bool:
        return self.base_prefix == self.help_prefix


@dataclass(frozen=True)
class ClozeInput:
    """One side of a cloze pair, ready for backend framing and inference."""

    prefix_ids: tuple[int, ...]
    sentence_ids: tuple[int, ...]
    masked_positions: tuple[int, ...]
    gold_ids: tuple[int, ...]

    @property
    def length_with_specials(self) -> int:
        # +2 for the sequence start/end framing tokens
        return len(self.prefix_ids) + len(self.sentence_ids) + 2


def build_cloze_pair(
    summary_tokens: Sequence[Token],
    sentence: Sentence,
    positions: Sequence[int],
    mask_id: int,
    filler_id: int,
    max_len: int,
    special_budget: int = 2,
) -> ClozePair:
    """Build the aligned base/help inputs for one masked sentence.

    The help prefix is the summary's token ids; the base prefix repeats the
    filler token to the same length. When prefix + sentence would exceed
    ``max_len`` (minus framing tokens), the prefix is truncated from its
    end; the sentence is never truncated because the masked tokens are the
    measurement substrate.
    """
    sent_ids = list(sentence.token_ids)
    budget = max_len - special_budget - len(sent_ids)
    if budget < 0:
        raise SentenceTooLong(
            f"sentence of {len(sent_ids)} tokens exceeds max_len {max_len} (budget {special_budget} specials)"
        )
    help_prefix = [t.vocab_id for t in summary_tokens][:budget]
    base_prefix = [filler_id] * len(help_prefix)

    masked = sorted(set(positions))
    gold = [sent_ids[p] for p in masked]
    masked_sent = list(sent_ids)
    for p in masked:
        masked_sent[p] = mask_id
    return ClozePair(
        base_prefix=tuple(base_prefix),
        help_prefix=tuple(help_prefix),
        sentence_tokens=tuple(masked_sent),
        masked_positions=tuple(masked),
        gold_ids=tuple(gold),
    )
