import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "tools"))

from blancscore.backends import UnigramBackend, load_bundle
from blancscore.textprep import Sentence, Token, WordRole
from blancscore.vocabulary import Vocabulary

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
TINY_BUNDLE = os.path.join(DATA_DIR, "tiny_bundle")

# real exported bundle for the desk-scale statistical checks; absent in CI
REAL_BUNDLE_ENV = "BLANCSCORE_BUNDLE"


def real_bundle_path() -> str | None:
    path = os.environ.get(REAL_BUNDLE_ENV)
    return path if path and os.path.isdir(path) else None


requires_real_bundle = pytest.mark.skipif(
    real_bundle_path() is None,
    reason=f"needs an exported model bundle (set ${REAL_BUNDLE_ENV})",
)


@pytest.fixture(scope="session")
def reference_backend():
    return UnigramBackend()


@pytest.fixture(scope="session")
def tiny_backend():
    return load_bundle(TINY_BUNDLE)


class CopyBoostBackend(UnigramBackend):
    """Context-sensitive stub: any token visible in the input gets a logit
    boost, so a summary containing a masked word raises its probability."""

    def __init__(self, bonus: float = 6.0):
        super().__init__()
        self.bonus = bonus

    def _logits_for_input(self, input_ids):
        vec = self._logits.copy()
        for tid in set(input_ids):
            vec[tid] += self.bonus
        return vec


class TwoValueBackend(UnigramBackend):
    """Gold probability is ``p_with`` when the marker token appears in the
    input and ``p_without`` otherwise; everything else shares the rest."""

    def __init__(self, marker_surface: str, p_with: float = 0.6, p_without: float = 0.4):
        super().__init__()
        self.marker_id = self.vocabulary.id_of(marker_surface)
        self.p_with = p_with
        self.p_without = p_without

    def _predict_impl(self, inputs):
        from blancscore.backends.base import outcomes_from_logits

        results = []
        size = len(self.vocabulary)
        for inp in inputs:
            ids, _ = self.frame(inp)
            p = self.p_with if self.marker_id in ids else self.p_without
            rows = []
            for gold in inp.gold_ids:
                vec = np.full(size, np.log((1.0 - p) / (size - 1)))
                vec[gold] = np.log(p)
                rows.append(vec)
            results.append(
                outcomes_from_logits(np.asarray(rows).reshape(len(inp.gold_ids), size), inp.gold_ids)
            )
        return results


@pytest.fixture
def copyboost_backend():
    return CopyBoostBackend()


def make_token(surface: str, role: WordRole = WordRole.WHOLE_WORD, vocab_id: int = 10) -> Token:
    return Token(surface=surface, vocab_id=vocab_id, char_length=len(surface), word_role=role)


def make_sentence(roles_and_lengths, start_id: int = 10) -> Sentence:
    """Sentence from (role, char_length) specs; ids are sequential."""
    toks = []
    for i, (role, length) in enumerate(roles_and_lengths):
        toks.append(Token("x" * length, start_id + i, length, role))
    return Sentence(tuple(toks), (0, 1))


def micro_vocabulary(extra: list[str] = ()) -> Vocabulary:
    surfaces = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", ".", ",",
                "alpha", "beta", "gamma", "delta", "epsilon", *extra]
    return Vocabulary(
        surfaces=surfaces,
        mask_id=4,
        unknown_id=1,
        filler_id=5,
        padding_id=0,
        sequence_start_id=2,
        sequence_end_id=3,
        max_len=64,
        lowercase=True,
    )
