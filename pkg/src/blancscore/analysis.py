"""Statistical harness: correlations, annotator-group splits, error counts.

Correlation coefficients are computed in-package (product-moment formula,
average ranks for ties); two-sided p-values use the t-distribution with
n-2 degrees of freedom. Splits follow the 3-vs-7 annotator methodology:
the small group's mean is compared against the large group's mean, and the
machine score is compared against the same large group.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateInput, EmptyInput, MissingScores

SIGNIFICANCE_LEVEL = 0.05


class Quality(enum.Enum):
    FLUENT = "fluent"
    UNDERSTANDABLE = "understandable"
    INFORMATIVE = "informative"
    COMPACT = "compact"
    OVERALL = "overall"


class ErrorType(enum.Enum):
    INCORRECT_NAMED_ENTITY = "incorrect_named_entity"
    INCORRECT_DATA = "incorrect_data"
    CASCADING = "cascading"
    HALLUCINATION = "hallucination"
    NEGATION = "negation"
    OTHER = "other"


MIN_SCORE = 0
MAX_SCORE = 4


@dataclass(frozen=True)
class AnnotationRecord:
    pair_id: str
    annotator_id: str
    quality: Quality
    score: int

    def __post_init__(self) -> None:
        if not MIN_SCORE <= self.score <= MAX_SCORE:
            raise ValueError(f"score {self.score} outside {MIN_SCORE}..{MAX_SCORE}")


class AnnotationSet:
    """Human quality scores, at most one per (pair, annotator, quality)."""

    def __init__(self, records: Iterable[AnnotationRecord]):
        self.records = list(records)
        seen = set()
        for r in self.records:
            key = (r.pair_id, r.annotator_id, r.quality)
            if key in seen:
                raise ValueError(f"duplicate annotation {key}")
            seen.add(key)

    def annotators(self) -> list[str]:
        return sorted({r.annotator_id for r in self.records})

    def pair_ids(self, quality: Quality) -> list[str]:
        return sorted({r.pair_id for r in self.records if r.quality is quality})

    def score_table(self, quality: Quality) -> dict[str, dict[str, int]]:
        """pair_id -> annotator_id -> score for one quality."""
        table: dict[str, dict[str, int]] = {}
        for r in self.records:
            if r.quality is quality:
                table.setdefault(r.pair_id, {})[r.annotator_id] = r.score
        return table


@dataclass(frozen=True)
class ErrorAnnotationRecord:
    pair_id: str
    annotator_id: str
    error_type: ErrorType
    span: tuple[int, int] | None = None


class ErrorAnnotationSet:
    """Factual-error marks from the error taxonomy."""

    def __init__(self, records: Iterable[ErrorAnnotationRecord]):
        self.records = list(records)

    def annotator_counts(self, pair_ids: Iterable[str]) -> dict[str, int]:
        """Distinct annotators who marked at least one error per pair."""
        marked: dict[str, set[str]] = {}
        for r in self.records:
            marked.setdefault(r.pair_id, set()).add(r.annotator_id)
        return {pid: len(marked.get(pid, ())) for pid in pair_ids}


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    n: int

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE_LEVEL


def _as_array(xs: Sequence[float], ys: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be 1-d and equally long")
    if x.size < 3:
        raise DegenerateInput(f"need at least 3 observations, got {x.size}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateInput("constant series has no defined correlation")
    return x, y


def _p_from_r(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return 2.0 * float(stats.t.sf(abs(t), n - 2))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation with a two-sided t-test p-value."""
    x, y = _as_array(xs, ys)
    n = x.size
    xc = x - x.mean()
    yc = y - y.mean()
    r = float(np.dot(xc, yc) / math.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))
    r = max(-1.0, min(1.0, r))
    return CorrelationResult(coefficient=r, p_value=_p_from_r(r, n), n=n)


def rankdata_average(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank block."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Rank correlation: Pearson on average ranks."""
    x, y = _as_array(xs, ys)
    return pearson(rankdata_average(x), rankdata_average(y))


def enumerate_splits(n: int, k: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All unordered k-subsets of range(n) with complements, lexicographic."""
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    universe = range(n)
    out = []
    for small in itertools.combinations(universe, k):
        small_set = set(small)
        large = tuple(i for i in universe if i not in small_set)
        out.append((small, large))
    return out


@dataclass(frozen=True)
class SplitRecord:
    """Correlations for one small/large annotator split.

    Coefficients are None when the correlation is undefined for the split
    (constant series); the significance flags treat those as not
    significant.
    """

    split_id: int
    small_members: tuple[str, ...]
    human_human: CorrelationResult | None
    blanc_human: CorrelationResult | None
    n_pairs: int

    @property
    def human_human_significant(self) -> bool:
        return self.human_human is not None and self.human_human.significant

    @property
    def blanc_human_significant(self) -> bool:
        return self.blanc_human is not None and self.blanc_human.significant


def split_correlation_analysis(
    annotations: AnnotationSet,
    scores: Mapping[str, float],
    quality: Quality,
    small_group_size: int = 3,
) -> list[SplitRecord]:
    """Per-split human-human and machine-human rank correlations.

    For every way of splitting the annotators into a small group and the
    complementary large group: correlate the groups' per-pair mean scores,
    and correlate the machine score against the large group's means.
    """
    table = annotations.score_table(quality)
    pair_ids = sorted(table)
    if not pair_ids:
        raise DegenerateInput(f"no annotations for quality {quality.value}")
    missing = [pid for pid in pair_ids if pid not in scores]
    if missing:
        raise MissingScores(f"pairs without scores: {missing[:5]}{'...' if len(missing) > 5 else ''}")
    annotators = annotations.annotators()

    records: list[SplitRecord] = []
    for split_id, (small_idx, large_idx) in enumerate(
        enumerate_splits(len(annotators), small_group_size)
    ):
        small = [annotators[i] for i in small_idx]
        large = [annotators[i] for i in large_idx]
        small_means: list[float] = []
        large_means: list[float] = []
        machine: list[float] = []
        for pid in pair_ids:
            row = table[pid]
            s_vals = [row[a] for a in small if a in row]
            l_vals = [row[a] for a in large if a in row]
            if not s_vals or not l_vals:
                continue
            small_means.append(sum(s_vals) / len(s_vals))
            large_means.append(sum(l_vals) / len(l_vals))
            machine.append(float(scores[pid]))

        def _safe(xs: list[float], ys: list[float]) -> CorrelationResult | None:
            try:
                return spearman(xs, ys)
            except DegenerateInput:
                return None

        records.append(
            SplitRecord(
                split_id=split_id,
                small_members=tuple(small),
                human_human=_safe(small_means, large_means),
                blanc_human=_safe(machine, large_means),
                n_pairs=len(machine),
            )
        )
    return records


def outperform_fraction(records: Sequence[SplitRecord]) -> float:
    """Fraction of splits where the machine score beats the small group.

    A split counts as a win when the machine-human coefficient is
    significant and either the human-human coefficient is not (absent
    coefficients are "not shown") or the machine-human coefficient is
    strictly larger. Splits where neither coefficient is significant leave
    the denominator.
    """
    if not records:
        raise EmptyInput("no split records")
    wins = 0
    comparable = 0
    for rec in records:
        hh = rec.human_human if rec.human_human_significant else None
        bh = rec.blanc_human if rec.blanc_human_significant else None
        if hh is None and bh is None:
            continue
        comparable += 1
        if bh is not None and (hh is None or bh.coefficient > hh.coefficient):
            wins += 1
    if comparable == 0:
        raise EmptyInput("no split has a significant coefficient")
    return wins / comparable


def error_correlation(
    scores: Mapping[str, float], errors: ErrorAnnotationSet
) -> tuple[CorrelationResult, CorrelationResult]:
    """Correlate scores against per-pair error-annotator counts.

    Returns (spearman, pearson). The predictor for each pair is the number
    of distinct annotators who marked at least one error on it; pairs with
    no marks count zero.
    """
    pair_ids = sorted(scores)
    if len(pair_ids) < 3:
        raise DegenerateInput("need at least 3 scored pairs")
    counts = errors.annotator_counts(pair_ids)
    xs = [float(counts[pid]) for pid in pair_ids]
    ys = [float(scores[pid]) for pid in pair_ids]
    return spearman(xs, ys), pearson(xs, ys)
