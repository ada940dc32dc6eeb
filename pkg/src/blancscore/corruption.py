"""Entity-swap corruption of summaries for factual-sensitivity experiments.

Entity extraction is rule-based and deterministic (capitalized name runs,
numbers, dates); extraction accuracy is not the measured quantity, the
score's response to a planted same-kind substitution is.
"""

from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass, replace
from importlib import resources
from typing import Mapping, Sequence

from .backends.base import MaskedLMBackend
from .errors import BlancError, EmptyInput, NoSwappableEntity
from .masking import MaskingPolicy
from .scoring import ScoreVariant, combined_square_score, score_pair

UNCHANGED_EPSILON = 1e-12


class EntityKind(enum.Enum):
    PERSON_LIKE = "person_like"
    NUMBER = "number"
    DATE = "date"


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    text: str
    kind: EntityKind


_MONTHS = (
    "January|February|March|April|May|June|July|August|September|October|November|December"
    "|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec"
)
_WEEKDAYS = {"Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"}

_DATE_RE = re.compile(
    rf"\b(?:{_MONTHS})\.?\s+\d{{1,2}}(?!\d)(?:st|nd|rd|th)?(?:,?\s*\d{{4}})?"
    rf"|\b\d{{1,2}}\s+(?:{_MONTHS})\b(?:\s+\d{{4}})?"
    rf"|\b(?:{_MONTHS})\s+\d{{4}}\b"
    r"|\b\d{4}-\d{2}-\d{2}\b"
)
_NUMBER_RE = re.compile(r"\b\d[\d,]*(?:\.\d+)?\b")
_CAP_WORD_RE = re.compile(r"[A-Z][A-Za-z'’-]+")

# capitalized function words and bare titles that never open an entity
_LEADING_STOPWORDS = {
    "The", "A", "An", "In", "On", "At", "By", "To", "Of", "For", "From", "With",
    "And", "But", "Or", "Nor", "So", "Yet", "As", "If", "When", "While", "After",
    "Before", "During", "Until", "Since", "Because", "Although", "Though", "However",
    "Meanwhile", "According", "He", "She", "It", "They", "We", "You", "His", "Her",
    "Their", "Our", "Its", "My", "Your", "This", "That", "These", "Those", "There",
    "Here", "Not", "No", "Earlier", "Later", "Both", "Some", "Many", "Several",
    "Other", "What", "Who", "About", "Nearly", "Almost", "Over", "Under", "Around",
    "Dr", "Mr", "Mrs", "Ms", "St", "Prof", "Gen", "Sen", "Rep", "Gov", "Capt",
    "Sgt", "Lt", "Col", "Rev", "Hon", "Jr", "Sr",
}
_MONTH_WORDS = set(_MONTHS.split("|"))


def _load_common_words() -> frozenset[str]:
    # ordinary lowercase words from the bundled lexicon; a capitalized one
    # standing alone is a sentence-start artifact, not a name
    text = resources.files("blancscore.data").joinpath("reference_lexicon.txt").read_text("utf-8")
    words = set()
    for line in text.splitlines():
        surface = line.split("\t")[0]
        if len(surface) >= 2 and surface.isalpha() and surface.islower():
            words.add(surface)
    return frozenset(words)


_COMMON_WORDS = _load_common_words()


def _overlaps(start: int, end: int, spans: Sequence[EntitySpan]) -> bool:
    return any(start < s.end and end > s.start for s in spans)


def extract_entities(text: str) -> list[EntitySpan]:
    """Pattern-based entity spans: dates, then numbers, then name runs.

    Name runs are consecutive capitalized words; leading capitalized
    function words and bare titles are dropped, runs made of month/weekday
    names only are treated as date debris, and a single capitalized word
    that is an ordinary dictionary word counts as sentence-start
    capitalization, not a name.
    """
    spans: list[EntitySpan] = []
    for m in _DATE_RE.finditer(text):
        spans.append(EntitySpan(m.start(), m.end(), m.group(), EntityKind.DATE))
    for m in _NUMBER_RE.finditer(text):
        if not _overlaps(m.start(), m.end(), spans):
            spans.append(EntitySpan(m.start(), m.end(), m.group(), EntityKind.NUMBER))

    # build capitalized runs: adjacent capitalized words with single spaces
    words = [(m.start(), m.end(), m.group()) for m in _CAP_WORD_RE.finditer(text)]
    run: list[tuple[int, int, str]] = []
    runs: list[list[tuple[int, int, str]]] = []
    for w in words:
        if run and text[run[-1][1] : w[0]] == " ":
            run.append(w)
        else:
            if run:
                runs.append(run)
            run = [w]
    if run:
        runs.append(run)
    for r in runs:
        while r and r[0][2] in _LEADING_STOPWORDS:
            r = r[1:]
        while r and (r[-1][2] in _MONTH_WORDS or r[-1][2] in _WEEKDAYS):
            r = r[:-1]
        if not r:
            continue
        if len(r) == 1 and r[0][2].lower() in _COMMON_WORDS:
            continue
        start, end = r[0][0], r[-1][1]
        if _overlaps(start, end, spans):
            continue
        spans.append(EntitySpan(start, end, text[start:end], EntityKind.PERSON_LIKE))
    return sorted(spans, key=lambda s: (s.start, s.end))


@dataclass(frozen=True)
class SwapSpan:
    start: int
    end: int
    original_text: str
    replacement_text: str
    kind: EntityKind


@dataclass(frozen=True)
class SwapTrial:
    """One corruption of one summary, scored under one policy label.

    The corrupted summary differs from the original exactly on the swapped
    span; the replacement is a same-kind entity from a different document.
    Skeletons from swap_entity carry no scores/label yet.
    """

    pair_id: str
    trial: int
    original_summary: str
    corrupted_summary: str
    span: SwapSpan
    label: str | None = None
    score_before: float | None = None
    score_after: float | None = None


PoolEntry = tuple[str, str]  # (entity text, source pair id)
EntityPool = Mapping[EntityKind, Sequence[PoolEntry]]


def build_entity_pool(pairs: Sequence[tuple[str, str, str]]) -> dict[EntityKind, list[PoolEntry]]:
    """Collect distinct (text, source) entities per kind from documents and summaries."""
    pool: dict[EntityKind, list[PoolEntry]] = {k: [] for k in EntityKind}
    seen: set[tuple[EntityKind, str, str]] = set()
    for pair_id, document, summary in pairs:
        for text in (document, summary):
            for span in extract_entities(text):
                key = (span.kind, span.text, pair_id)
                if key not in seen:
                    seen.add(key)
                    pool[span.kind].append((span.text, pair_id))
    return pool


def swap_entity(
    summary: str,
    corpus_pool: EntityPool,
    seed: int | str,
    pair_id: str = "",
    trial: int = 0,
) -> SwapTrial:
    """Replace one uniformly chosen entity with a same-kind foreign one.

    Deterministic for a fixed seed. Raises NoSwappableEntity when the
    summary has no entity with a usable replacement (same kind, different
    source document, different text).
    """
    rng = random.Random(seed)
    entities = extract_entities(summary)
    candidates = []
    for ent in entities:
        options = [
            text
            for text, source in corpus_pool.get(ent.kind, ())
            if source != pair_id and text != ent.text
        ]
        if options:
            candidates.append((ent, options))
    if not candidates:
        raise NoSwappableEntity(f"summary of pair {pair_id!r} has no swappable entity")
    ent, options = candidates[rng.randrange(len(candidates))]
    replacement = options[rng.randrange(len(options))]
    corrupted = summary[: ent.start] + replacement + summary[ent.end :]
    return SwapTrial(
        pair_id=pair_id,
        trial=trial,
        original_summary=summary,
        corrupted_summary=corrupted,
        span=SwapSpan(ent.start, ent.end, ent.text, replacement, ent.kind),
    )


def policy_label(policy: MaskingPolicy) -> str:
    label = f"gap{policy.gap}"
    if policy.mask_width > 1:
        label += f"_w{policy.mask_width}"
    return label


COMBINED_LABEL = "squares_2_6"


@dataclass(frozen=True)
class SwapFractions:
    """Direction-of-change fractions for one policy label (they sum to 1)."""

    label: str
    n_trials: int
    frac_decreased: float
    frac_increased: float
    frac_unchanged: float


@dataclass(frozen=True)
class SwapReport:
    fractions: list[SwapFractions]
    trials: list[SwapTrial]
    failures: list[tuple[str, str]]  # (pair_id, error message)


def _fractions(label: str, deltas: list[float]) -> SwapFractions:
    n = len(deltas)
    dec = sum(1 for d in deltas if d < -UNCHANGED_EPSILON)
    inc = sum(1 for d in deltas if d > UNCHANGED_EPSILON)
    return SwapFractions(
        label=label,
        n_trials=n,
        frac_decreased=dec / n,
        frac_increased=inc / n,
        frac_unchanged=(n - dec - inc) / n,
    )


def swap_experiment(
    pairs: Sequence[tuple[str, str, str]],
    policies: Sequence[MaskingPolicy],
    variant: ScoreVariant,
    backend: MaskedLMBackend,
    seed: int | str,
    trials_per_pair: int = 1,
) -> SwapReport:
    """Score original vs entity-swapped summaries across policies.

    Per-pair errors are recorded and skipped; the experiment aborts only
    when every pair fails. When policies include both gaps 2 and 6, the
    experimental combined squares metric is reported as well.
    """
    labels = [policy_label(p) for p in policies]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate policy labels: {labels}")
    pool = build_entity_pool(pairs)
    gaps_present = {p.gap for p in policies}
    with_combined = {2, 6} <= gaps_present

    trials: list[SwapTrial] = []
    failures: list[tuple[str, str]] = []
    deltas: dict[str, list[float]] = {lab: [] for lab in labels}
    if with_combined:
        deltas[COMBINED_LABEL] = []

    for pair_id, document, summary in pairs:
        try:
            before = {
                lab: score_pair(document, summary, pol, variant, backend).score
                for lab, pol in zip(labels, policies)
            }
        except BlancError as exc:
            failures.append((pair_id, f"{type(exc).__name__}: {exc}"))
            continue
        for t in range(trials_per_pair):
            try:
                skeleton = swap_entity(
                    summary, pool, seed=f"{seed}|{pair_id}|{t}", pair_id=pair_id, trial=t
                )
            except NoSwappableEntity as exc:
                failures.append((pair_id, f"{type(exc).__name__}: {exc}"))
                break  # candidates are seed-independent; further trials would fail too
            try:
                after = {
                    lab: score_pair(document, skeleton.corrupted_summary, pol, variant, backend).score
                    for lab, pol in zip(labels, policies)
                }
            except BlancError as exc:
                failures.append((pair_id, f"{type(exc).__name__}: {exc}"))
                continue
            for lab in labels:
                deltas[lab].append(after[lab] - before[lab])
                trials.append(
                    replace(skeleton, label=lab, score_before=before[lab], score_after=after[lab])
                )
            if with_combined:
                by_gap_before = {p.gap: before[lab] for p, lab in zip(policies, labels)}
                by_gap_after = {p.gap: after[lab] for p, lab in zip(policies, labels)}
                c_before = combined_square_score(by_gap_before)
                c_after = combined_square_score(by_gap_after)
                deltas[COMBINED_LABEL].append(c_after - c_before)
                trials.append(
                    replace(
                        skeleton, label=COMBINED_LABEL, score_before=c_before, score_after=c_after
                    )
                )

    scored_labels = [lab for lab in deltas if deltas[lab]]
    if not scored_labels:
        raise EmptyInput("all pairs failed in the swap experiment")
    fractions = [_fractions(lab, deltas[lab]) for lab in deltas if deltas[lab]]
    return SwapReport(fractions=fractions, trials=trials, failures=failures)
