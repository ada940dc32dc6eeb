"""File formats owned by the CLI: pair JSONL, score JSONL, analysis CSVs.

JSONL is used for streamable pair/score/trial data, CSV for plot-friendly
analysis tables. Every writer stamps a schema version (a field on JSONL
records, a leading ``# schema:`` comment line on CSVs) and writes with a
fixed key order so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .analysis import AnnotationRecord, AnnotationSet, Quality, SplitRecord
from .corruption import SwapFractions, SwapTrial
from .scoring import BatchEntry

SCORE_SCHEMA = "blancscore/score-v1"
SWAP_SCHEMA = "blancscore/swap-v1"
SWEEP_SCHEMA = "blancscore/sweep-v1"
SPLITS_SCHEMA = "blancscore/splits-v1"
SWAP_SUMMARY_SCHEMA = "blancscore/swap-summary-v1"


@dataclass(frozen=True)
class PairRecord:
    """One scoring unit: a document and its candidate summary."""

    id: str
    document: str
    summary: str


class FormatError(ValueError):
    """Fatal malformation of an input file (bad header, duplicate ids)."""


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def read_pairs_jsonl(path: str) -> tuple[list[PairRecord], list[tuple[int, str]]]:
    """Read pair records; malformed lines are reported, not fatal.

    Returns (pairs, line_errors). Duplicate ids are fatal because they
    would make per-id error reporting ambiguous.
    """
    pairs: list[PairRecord] = []
    line_errors: list[tuple[int, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                pair = PairRecord(
                    id=str(obj["id"]), document=obj["document"], summary=obj["summary"]
                )
                if not isinstance(pair.document, str) or not isinstance(pair.summary, str):
                    raise TypeError("document and summary must be strings")
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                line_errors.append((line_no, f"{type(exc).__name__}: {exc}"))
                continue
            if pair.id in seen:
                raise FormatError(f"line {line_no}: duplicate pair id {pair.id!r}")
            seen.add(pair.id)
            pairs.append(pair)
    return pairs, line_errors


def score_record_lines(
    entries: Sequence[BatchEntry], gap: int, variant: str
) -> list[str]:
    lines = []
    for e in entries:
        if e.result is not None:
            r = e.result
            lines.append(
                _dumps(
                    {
                        "schema": SCORE_SCHEMA,
                        "id": e.pair_id,
                        "variant": variant,
                        "gap": gap,
                        "score": r.score,
                        "n_help": r.n_help,
                        "n_base": r.n_base,
                        "n_total": r.n_total,
                    }
                )
            )
        else:
            lines.append(
                _dumps(
                    {
                        "schema": SCORE_SCHEMA,
                        "id": e.pair_id,
                        "variant": variant,
                        "gap": gap,
                        "error": e.error,
                        "message": e.message,
                    }
                )
            )
    return lines


def read_scores_jsonl(path: str) -> dict[str, float]:
    """Load id -> score from a score JSONL file, skipping error records."""
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"line {line_no}: {exc}") from None
            if "error" in obj:
                continue
            try:
                scores[str(obj["id"])] = float(obj["score"])
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"line {line_no}: {type(exc).__name__}: {exc}") from None
    return scores


_ANNOTATION_HEADER = ["pair_id", "annotator_id", "quality", "score"]


def read_annotations_csv(path: str) -> AnnotationSet:
    """Parse the fixed annotation schema; violations name their line."""
    records: list[AnnotationRecord] = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != _ANNOTATION_HEADER:
            raise FormatError(
                f"annotation header must be {','.join(_ANNOTATION_HEADER)}, got {header}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise FormatError(f"line {line_no}: expected 4 columns, got {len(row)}")
            pair_id, annotator_id, quality_raw, score_raw = (c.strip() for c in row)
            try:
                quality = Quality(quality_raw.lower())
            except ValueError:
                raise FormatError(f"line {line_no}: unknown quality {quality_raw!r}") from None
            try:
                score = int(score_raw)
                records.append(AnnotationRecord(pair_id, annotator_id, quality, score))
            except ValueError as exc:
                raise FormatError(f"line {line_no}: {exc}") from None
    try:
        return AnnotationSet(records)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _csv_text(schema: str, header: list[str], rows: Iterable[Sequence], trailer: list[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    for line in trailer:
        buf.write(line + "\n")
    return buf.getvalue()


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def sweep_csv(rows: Sequence[dict]) -> str:
    header = ["gap", "mask_width", "n_pairs", "mean_score", "spearman_rho", "spearman_p"]
    return _csv_text(
        SWEEP_SCHEMA,
        header,
        [
            [
                r["gap"],
                r["mask_width"],
                r["n_pairs"],
                _fmt(r["mean_score"]),
                _fmt(r.get("spearman_rho")),
                _fmt(r.get("spearman_p")),
            ]
            for r in rows
        ],
    )


def splits_csv(records: Sequence[SplitRecord], fraction: float | None) -> str:
    header = [
        "split_id",
        "members",
        "human_human_rho",
        "human_human_p",
        "blanc_human_rho",
        "blanc_human_p",
        "human_human_significant",
        "blanc_human_significant",
        "n_pairs",
    ]
    rows = []
    for rec in records:
        hh, bh = rec.human_human, rec.blanc_human
        rows.append(
            [
                rec.split_id,
                "|".join(rec.small_members),
                _fmt(hh.coefficient if hh else None),
                _fmt(hh.p_value if hh else None),
                _fmt(bh.coefficient if bh else None),
                _fmt(bh.p_value if bh else None),
                int(rec.human_human_significant),
                int(rec.blanc_human_significant),
                rec.n_pairs,
            ]
        )
    trailer = [] if fraction is None else [f"# outperform_fraction: {fraction!r}"]
    return _csv_text(SPLITS_SCHEMA, header, rows, trailer)


def swap_summary_csv(fractions: Sequence[SwapFractions]) -> str:
    header = ["gap", "n_trials", "frac_decreased", "frac_increased", "frac_unchanged"]
    rows = [
        [
            f.label.removeprefix("gap"),
            f.n_trials,
            _fmt(f.frac_decreased),
            _fmt(f.frac_increased),
            _fmt(f.frac_unchanged),
        ]
        for f in fractions
    ]
    return _csv_text(SWAP_SUMMARY_SCHEMA, header, rows)


def swap_trial_lines(trials: Sequence[SwapTrial], failures: Sequence[tuple[str, str]]) -> list[str]:
    lines = []
    for t in trials:
        lines.append(
            _dumps(
                {
                    "schema": SWAP_SCHEMA,
                    "pair_id": t.pair_id,
                    "trial": t.trial,
                    "label": t.label,
                    "score_before": t.score_before,
                    "score_after": t.score_after,
                    "span": {
                        "start": t.span.start,
                        "end": t.span.end,
                        "original_text": t.span.original_text,
                        "replacement_text": t.span.replacement_text,
                        "entity_kind": t.span.kind.value,
                    },
                    "original_summary": t.original_summary,
                    "corrupted_summary": t.corrupted_summary,
                }
            )
        )
    for pair_id, message in failures:
        lines.append(_dumps({"schema": SWAP_SCHEMA, "pair_id": pair_id, "error": message}))
    return lines


def scores_from_entries(entries: Sequence[BatchEntry]) -> dict[str, float]:
    return {e.pair_id: e.result.score for e in entries if e.result is not None}
