"""Deterministic reference backend backed by a unigram frequency table.

Context-independent by design: every masked position receives the same
logit vector, ln(count + 1) over the bundled lexicon, so probabilities are
(count_t + 1) / sum(count + 1) and can be cross-checked by direct table
lookup. Exists so the full scoring pipeline runs in CI without a real
model.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from ..masking import ClozeInput
from ..vocabulary import Vocabulary
from .base import MaskedLMBackend, PredictionOutcome, outcomes_from_logits

_LEXICON_RESOURCE = "reference_lexicon.txt"
_MAX_LEN = 512


def load_reference_lexicon() -> tuple[Vocabulary, np.ndarray]:
    """Parse the bundled surface/count table into a vocabulary and counts."""
    text = resources.files("blancscore.data").joinpath(_LEXICON_RESOURCE).read_text("utf-8")
    surfaces: list[str] = []
    counts: list[int] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        surface, count = line.split("\t")
        surfaces.append(surface)
        counts.append(int(count))
    table = {s: i for i, s in enumerate(surfaces)}
    vocab = Vocabulary(
        surfaces=surfaces,
        mask_id=table["[MASK]"],
        unknown_id=table["[UNK]"],
        filler_id=table["."],
        padding_id=table["[PAD]"],
        sequence_start_id=table["[CLS]"],
        sequence_end_id=table["[SEP]"],
        max_len=_MAX_LEN,
        lowercase=True,
    )
    return vocab, np.asarray(counts, dtype=np.float64)


class UnigramBackend(MaskedLMBackend):
    """Frequency-table predictor; reproducible bit-exactly."""

    def __init__(self, vocabulary: Vocabulary | None = None, counts: np.ndarray | None = None):
        if vocabulary is None or counts is None:
            vocabulary, counts = load_reference_lexicon()
        if len(counts) != len(vocabulary):
            raise ValueError("counts length must match vocabulary size")
        self._vocab = vocabulary
        self.counts = np.asarray(counts, dtype=np.float64)
        self._logits = np.log(self.counts + 1.0)

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocab

    def _logits_for_input(self, input_ids: list[int]) -> np.ndarray:
        """Logit vector applied at every masked position of one input.

        Ignores the input entirely; subclasses in tests override this to
        construct context-sensitive behavior.
        """
        return self._logits

    def _predict_impl(self, inputs: list[ClozeInput]) -> list[list[PredictionOutcome]]:
        results: list[list[PredictionOutcome]] = []
        for inp in inputs:
            ids, _ = self.frame(inp)
            vec = self._logits_for_input(ids)
            rows = np.repeat(vec[None, :], len(inp.gold_ids), axis=0)
            results.append(outcomes_from_logits(rows, inp.gold_ids))
        return results
