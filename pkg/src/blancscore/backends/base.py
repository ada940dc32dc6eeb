"""Uniform masked-LM inference interface.

Backends take cloze inputs (prefix + partially masked sentence), frame them
with the sequence start/end tokens from their tokenizer config, and return
one PredictionOutcome per masked position. Batching is an internal concern
of each backend and never changes results.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InputTooLong
from ..masking import ClozeInput
from ..vocabulary import Vocabulary


@dataclass(frozen=True)
class PredictionOutcome:
    """Model scores for the gold token at one masked position.

    gold_prob is softmax over the full vocabulary evaluated at the gold id;
    gold_logprob is its natural log; top_id maximizes the logit vector.
    """

    gold_id: int
    top_id: int
    gold_logit: float
    gold_prob: float
    gold_logprob: float


def outcomes_from_logits(logits: np.ndarray, gold_ids: Sequence[int]) -> list[PredictionOutcome]:
    """Turn per-position logit rows into outcomes (stable log-softmax)."""
    if len(gold_ids) == 0:
        return []
    rows = np.asarray(logits, dtype=np.float64)
    assert rows.shape[0] == len(gold_ids)
    out: list[PredictionOutcome] = []
    for row, gold in zip(rows, gold_ids):
        m = float(np.max(row))
        lse = m + float(np.log(np.sum(np.exp(row - m))))
        gold_logit = float(row[gold])
        gold_logprob = gold_logit - lse
        out.append(
            PredictionOutcome(
                gold_id=int(gold),
                top_id=int(np.argmax(row)),
                gold_logit=gold_logit,
                gold_prob=float(np.exp(gold_logprob)),
                gold_logprob=float(gold_logprob),
            )
        )
    return out


class MaskedLMBackend(abc.ABC):
    """Interface every inference backend implements."""

    @property
    @abc.abstractmethod
    def vocabulary(self) -> Vocabulary: ...

    @property
    def thread_safe(self) -> bool:
        """Whether predict() may be called concurrently. Backends that
        return False are serialized by the scoring layer."""
        return True

    def frame(self, inp: ClozeInput) -> tuple[list[int], list[int]]:
        """Compose the full input id sequence and absolute masked positions."""
        v = self.vocabulary
        ids = [v.sequence_start_id, *inp.prefix_ids, *inp.sentence_ids, v.sequence_end_id]
        shift = 1 + len(inp.prefix_ids)
        return ids, [shift + p for p in inp.masked_positions]

    def predict(self, inputs: Sequence[ClozeInput]) -> list[list[PredictionOutcome]]:
        """One outcome list per input, order preserving."""
        v = self.vocabulary
        for inp in inputs:
            if inp.length_with_specials > v.max_len:
                raise InputTooLong(
                    f"input of {inp.length_with_specials} tokens exceeds max_len {v.max_len}"
                )
            for gid in inp.gold_ids:
                if not 0 <= gid < len(v):
                    raise ValueError(f"gold id {gid} outside vocabulary")
        return self._predict_impl(list(inputs))

    @abc.abstractmethod
    def _predict_impl(self, inputs: list[ClozeInput]) -> list[list[PredictionOutcome]]: ...
