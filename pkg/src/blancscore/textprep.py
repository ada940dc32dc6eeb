"""Sentence segmentation and subword tokenization with word-role labels.

Turns raw document/summary strings into sentences of role-labeled subword
tokens. Subword segmentation is greedy longest-match against the active
backend vocabulary, so token ids line up with what the model was trained
on. Sentence segmentation is rule based (terminal punctuation plus an
abbreviation exception list shipped as a data file) and fully
deterministic.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass
from importlib import resources

from .vocabulary import Vocabulary


class WordRole(enum.Enum):
    """How a subword token relates to the word it came from."""

    WHOLE_WORD = "whole_word"
    WORD_START = "word_start"
    WORD_CONTINUATION = "word_continuation"


@dataclass(frozen=True)
class Token:
    """One subword token.

    ``surface`` carries no continuation marker; for words that fell back to
    the unknown id it is the original word text, so ``char_length`` stays
    meaningful for masking-eligibility thresholds.
    """

    surface: str
    vocab_id: int
    char_length: int
    word_role: WordRole


@dataclass(frozen=True)
class Sentence:
    """An ordered run of tokens plus its character span in the source text."""

    tokens: tuple[Token, ...]
    source_span: tuple[int, int]

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def token_ids(self) -> list[int]:
        return [t.vocab_id for t in self.tokens]


# --------------------------------------------------------------------------
# sentence segmentation
# --------------------------------------------------------------------------

_TERMINALS = ".!?"
_CLOSERS = "\"'”’)]}"
_OPENERS = "\"'“‘([{"


def _load_abbreviations() -> frozenset[str]:
    text = resources.files("blancscore.data").joinpath("abbreviations.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


_ABBREVIATIONS = _load_abbreviations()

# token ending at a candidate period, e.g. "Dr." or "U.S." or "J."
_TRAILING_WORD = re.compile(r"(\S+)$")


def _is_abbreviation(prefix: str) -> bool:
    """True when the text ending at a period looks like an abbreviation.

    Checks the trailing token (quotes/parens stripped) against the
    exception list, and treats single capital letters ("J.") as initials.
    """
    m = _TRAILING_WORD.search(prefix)
    if not m:
        return False
    word = m.group(1).lstrip(_OPENERS)
    if word in _ABBREVIATIONS:
        return True
    # multi-dot acronyms not on the list, e.g. "U.S.S.R."
    if re.fullmatch(r"(?:[A-Za-z]\.){2,}", word):
        return True
    # a single initial, as in "J. Smith"
    if re.fullmatch(r"[A-Z]\.", word):
        return True
    return False


def split_sentences(document: str) -> list[tuple[str, tuple[int, int]]]:
    """Split a document into sentences with source character spans.

    A sentence ends at a run of terminal punctuation (plus any closing
    quotes/brackets) that is followed by whitespace and a plausible
    sentence opener, unless the preceding token is a known abbreviation or
    a single-letter initial. Text after the last terminal becomes a final
    sentence. Every non-whitespace character of the input falls inside
    exactly one returned span.
    """
    if not document or not document.strip():
        return []

    boundaries: list[int] = []
    i = 0
    n = len(document)
    while i < n:
        ch = document[i]
        if ch not in _TERMINALS:
            i += 1
            continue
        # absorb the full terminal run, then trailing closers
        j = i
        while j < n and document[j] in _TERMINALS:
            j += 1
        end = j
        while end < n and document[end] in _CLOSERS:
            end += 1
        # must be followed by whitespace (or end of text)
        if end < n and not document[end].isspace():
            i = j
            continue
        # the next sentence must start plausibly
        k = end
        while k < n and document[k].isspace():
            k += 1
        if k < n:
            nxt = document[k]
            if not (nxt.isupper() or nxt.isdigit() or nxt in _OPENERS):
                i = j
                continue
        # abbreviation guard only applies to a single period
        if document[i] == "." and j - i == 1 and _is_abbreviation(document[:j]):
            i = j
            continue
        boundaries.append(end)
        i = end

    out: list[tuple[str, tuple[int, int]]] = []
    prev = 0
    for b in boundaries + [n]:
        piece = document[prev:b]
        stripped = piece.strip()
        if stripped:
            start = prev + len(piece) - len(piece.lstrip())
            out.append((stripped, (start, start + len(stripped))))
        prev = b
    return out


# --------------------------------------------------------------------------
# BERT-style basic tokenization
# --------------------------------------------------------------------------


def _is_control(ch: str) -> bool:
    if ch in ("\t", "\n", "\r"):
        return False
    return unicodedata.category(ch).startswith("C")


def _is_whitespace(ch: str) -> bool:
    if ch in (" ", "\t", "\n", "\r"):
        return True
    return unicodedata.category(ch) == "Zs"


def _is_punctuation(ch: str) -> bool:
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def _is_cjk(cp: int) -> bool:
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0x20000 <= cp <= 0x2A6DF
        or 0x2A700 <= cp <= 0x2B73F
        or 0x2B740 <= cp <= 0x2B81F
        or 0x2B820 <= cp <= 0x2CEAF
        or 0xF900 <= cp <= 0xFAFF
        or 0x2F800 <= cp <= 0x2FA1F
    )


def _clean_text(text: str) -> str:
    out = []
    for ch in text:
        cp = ord(ch)
        if cp == 0 or cp == 0xFFFD or _is_control(ch):
            continue
        out.append(" " if _is_whitespace(ch) else ch)
    return "".join(out)


def _space_cjk(text: str) -> str:
    out = []
    for ch in text:
        if _is_cjk(ord(ch)):
            out.append(f" {ch} ")
        else:
            out.append(ch)
    return "".join(out)


def _strip_accents(text: str) -> str:
    return "".join(ch for ch in unicodedata.normalize("NFD", text) if unicodedata.category(ch) != "Mn")


def _split_on_punctuation(word: str) -> list[str]:
    pieces: list[str] = []
    current: list[str] = []
    for ch in word:
        if _is_punctuation(ch):
            if current:
                pieces.append("".join(current))
                current = []
            pieces.append(ch)
        else:
            current.append(ch)
    if current:
        pieces.append("".join(current))
    return pieces


def basic_tokenize(text: str, lowercase: bool) -> list[str]:
    """Whitespace/punctuation word splitting as the model's tokenizer does it."""
    text = _clean_text(text)
    text = _space_cjk(text)
    words: list[str] = []
    for raw in text.split():
        if lowercase:
            raw = _strip_accents(raw.lower())
        words.extend(_split_on_punctuation(raw))
    return [w for w in words if w]


# --------------------------------------------------------------------------
# WordPiece
# --------------------------------------------------------------------------

_MAX_WORD_CHARS = 100


def wordpiece_pieces(word: str, vocab: Vocabulary) -> list[str] | None:
    """Greedy longest-match segmentation of one word.

    Returns the vocabulary pieces (continuations carry the ``##`` marker),
    or None when the word cannot be segmented and must map to the unknown
    token.
    """
    if len(word) > _MAX_WORD_CHARS:
        return None
    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = "##" + piece
            if vocab.contains(piece):
                match = piece
                break
            end -= 1
        if match is None:
            return None
        pieces.append(match)
        start = end
    return pieces


def tokenize(text: str, vocab: Vocabulary) -> list[Token]:
    """Tokenize text into role-labeled subword tokens.

    Words that defeat segmentation map to the unknown id and keep their
    original surface (role WHOLE_WORD) so length thresholds still apply.
    """
    tokens: list[Token] = []
    for word in basic_tokenize(text, vocab.lowercase):
        pieces = wordpiece_pieces(word, vocab)
        if pieces is None:
            tokens.append(Token(word, vocab.unknown_id, len(word), WordRole.WHOLE_WORD))
            continue
        if len(pieces) == 1:
            tokens.append(Token(pieces[0], vocab.id_of(pieces[0]), len(pieces[0]), WordRole.WHOLE_WORD))
            continue
        for idx, piece in enumerate(pieces):
            surface = piece[2:] if piece.startswith("##") else piece
            role = WordRole.WORD_START if idx == 0 else WordRole.WORD_CONTINUATION
            tokens.append(Token(surface, vocab.id_of(piece), len(surface), role))
    return tokens


def prepare_document(document: str, vocab: Vocabulary) -> list[Sentence]:
    """Split a document and tokenize each sentence.

    Sentences that tokenize to nothing (e.g. stripped control characters)
    are dropped.
    """
    sentences: list[Sentence] = []
    for text, span in split_sentences(document):
        toks = tokenize(text, vocab)
        if toks:
            sentences.append(Sentence(tuple(toks), span))
    return sentences
