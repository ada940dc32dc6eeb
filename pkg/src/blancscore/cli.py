"""Command-line surface: scoring, parameter sweeps, split analysis, swap simulation.

Exit codes: 0 clean, 2 partial (some records failed but valid ones were
produced), 1 fatal (bad flags, unreadable input, bundle failure). All
commands are deterministic given inputs, flags, and seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import formats, reports
from .analysis import DegenerateInput, Quality, outperform_fraction, spearman, split_correlation_analysis
from .backends import get_backend
from .corruption import swap_experiment
from .errors import BlancError
from .formats import FormatError, PairRecord
from .masking import MaskingPolicy
from .scoring import ScoreVariant, score_batch

BUNDLE_ENV_VAR = "BLANCSCORE_BUNDLE"

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _default_backend() -> str:
    return os.environ.get(BUNDLE_ENV_VAR, "reference")


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--backend",
        default=_default_backend(),
        help="'reference' or a model bundle directory (default: $%s or reference)" % BUNDLE_ENV_VAR,
    )
    p.add_argument("--batch-size", type=int, default=8)


def _add_policy_flags(p: argparse.ArgumentParser, with_gap: bool = True) -> None:
    if with_gap:
        p.add_argument("--gap", type=int, default=6, help="mask step M (default 6)")
    p.add_argument("--min-word-len", type=int, default=4)
    p.add_argument("--min-start-len", type=int, default=0)
    p.add_argument("--min-cont-len", type=int, default=1000)
    p.add_argument("--mask-width", type=int, default=1)


def _policy_from(args, gap: int | None = None, mask_width: int | None = None) -> MaskingPolicy:
    return MaskingPolicy(
        gap=gap if gap is not None else args.gap,
        min_word_len=args.min_word_len,
        min_start_len=args.min_start_len,
        min_cont_len=args.min_cont_len,
        mask_width=mask_width if mask_width is not None else args.mask_width,
    )


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _read_pairs(args) -> tuple[list[PairRecord], list[tuple[int, str]]]:
    if args.input:
        return formats.read_pairs_jsonl(args.input)
    doc = Path(args.doc).read_text(encoding="utf-8")
    summary = Path(args.summary).read_text(encoding="utf-8")
    return [PairRecord(id=Path(args.doc).stem, document=doc, summary=summary)], []


def _write_lines(lines: list[str], output: str | None) -> None:
    text = "\n".join(lines) + ("\n" if lines else "")
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _plot_path(output: str, suffix: str) -> str:
    p = Path(output)
    return str(p.with_name(p.stem + suffix + ".png"))


# ----------------------------------------------------------------------
# score
# ----------------------------------------------------------------------


def cmd_score(args) -> int:
    backend = get_backend(args.backend, batch_size=args.batch_size)
    pairs, line_errors = _read_pairs(args)
    for line_no, message in line_errors:
        print(f"input line {line_no}: {message}", file=sys.stderr)
    variant = ScoreVariant(args.variant)
    policy = _policy_from(args)
    entries = score_batch(
        [(p.id, p.document, p.summary) for p in pairs],
        policy,
        variant,
        backend,
        parallelism=args.parallelism,
    )
    lines = formats.score_record_lines(entries, gap=policy.gap, variant=variant.value)
    _write_lines(lines, args.output)
    if args.output and not args.no_plots:
        scores = [e.result.score for e in entries if e.result is not None]
        if scores:
            reports.render_score_histogram(scores, _plot_path(args.output, "_hist"))
    partial = bool(line_errors) or any(e.error for e in entries)
    return EXIT_PARTIAL if partial else EXIT_OK


# ----------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------


def cmd_sweep(args) -> int:
    backend = get_backend(args.backend, batch_size=args.batch_size)
    pairs, line_errors = _read_pairs(args)
    for line_no, message in line_errors:
        print(f"input line {line_no}: {message}", file=sys.stderr)
    variant = ScoreVariant(args.variant)
    human_means: dict[str, float] | None = None
    if args.annotations:
        annotations = formats.read_annotations_csv(args.annotations)
        quality = Quality(args.quality)
        table = annotations.score_table(quality)
        human_means = {pid: sum(row.values()) / len(row) for pid, row in table.items() if row}

    rows = []
    had_error = bool(line_errors)
    for width in args.mask_widths:
        for gap in args.gaps:
            policy = _policy_from(args, gap=gap, mask_width=width)
            entries = score_batch(
                [(p.id, p.document, p.summary) for p in pairs],
                policy,
                variant,
                backend,
                parallelism=args.parallelism,
            )
            had_error = had_error or any(e.error for e in entries)
            scored = formats.scores_from_entries(entries)
            row = {
                "gap": gap,
                "mask_width": width,
                "n_pairs": len(scored),
                "mean_score": (sum(scored.values()) / len(scored)) if scored else None,
                "spearman_rho": None,
                "spearman_p": None,
            }
            if human_means is not None:
                shared = sorted(set(scored) & set(human_means))
                try:
                    corr = spearman([scored[i] for i in shared], [human_means[i] for i in shared])
                    row["spearman_rho"] = corr.coefficient
                    row["spearman_p"] = corr.p_value
                except DegenerateInput:
                    pass
            rows.append(row)

    text = formats.sweep_csv(rows)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        if not args.no_plots:
            reports.render_sweep(rows, _plot_path(args.output, ""))
    else:
        sys.stdout.write(text)
    return EXIT_PARTIAL if had_error else EXIT_OK


# ----------------------------------------------------------------------
# analyze
# ----------------------------------------------------------------------


def cmd_analyze(args) -> int:
    annotations = formats.read_annotations_csv(args.annotations)
    scores = formats.read_scores_jsonl(args.scores)
    quality = Quality(args.quality)
    records = split_correlation_analysis(annotations, scores, quality, small_group_size=args.group_size)
    try:
        fraction = outperform_fraction(records)
    except BlancError:
        fraction = None
    text = formats.splits_csv(records, fraction)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        if not args.no_plots:
            reports.render_split_correlations(records, quality.value, _plot_path(args.output, "_correlations"))
            if fraction is not None:
                reports.render_outperform(fraction, quality.value, _plot_path(args.output, "_outperform"))
    else:
        sys.stdout.write(text)
    if fraction is not None:
        print(f"outperform_fraction: {fraction:.4f}", file=sys.stderr)
    return EXIT_OK


# ----------------------------------------------------------------------
# swap-sim
# ----------------------------------------------------------------------


def cmd_swap_sim(args) -> int:
    backend = get_backend(args.backend, batch_size=args.batch_size)
    pairs, line_errors = _read_pairs(args)
    for line_no, message in line_errors:
        print(f"input line {line_no}: {message}", file=sys.stderr)
    variant = ScoreVariant(args.variant)
    policies = [_policy_from(args, gap=g) for g in args.gaps]
    report = swap_experiment(
        [(p.id, p.document, p.summary) for p in pairs],
        policies,
        variant,
        backend,
        seed=args.seed,
        trials_per_pair=args.trials_per_pair,
    )
    _write_lines(formats.swap_trial_lines(report.trials, report.failures), args.output)
    summary_text = formats.swap_summary_csv(report.fractions)
    if args.summary_output:
        Path(args.summary_output).write_text(summary_text, encoding="utf-8")
        if not args.no_plots:
            reports.render_swap_fractions(report.fractions, _plot_path(args.summary_output, ""))
    else:
        sys.stderr.write(summary_text)
    partial = bool(line_errors) or bool(report.failures)
    return EXIT_PARTIAL if partial else EXIT_OK


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blancscore",
        description="Reference-free summary quality scoring with masked-LM cloze tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score document/summary pairs to JSONL")
    p.add_argument("--input", help="pair JSONL: {id, document, summary} per line")
    p.add_argument("--doc", help="plain-text document file (with --summary)")
    p.add_argument("--summary", help="plain-text summary file (with --doc)")
    p.add_argument("--variant", default="accuracy", choices=[v.value for v in ScoreVariant])
    _add_policy_flags(p)
    _add_backend_flags(p)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--output", help="output JSONL path (default stdout)")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sweep", help="mean score and human correlation per gap/width")
    p.add_argument("--input", required=True)
    p.add_argument("--gaps", type=_int_list, default=[1, 2, 3, 6])
    p.add_argument("--mask-widths", type=_int_list, default=[1])
    p.add_argument("--variant", default="accuracy", choices=[v.value for v in ScoreVariant])
    p.add_argument("--annotations", help="annotation CSV (pair_id, annotator_id, quality, score)")
    p.add_argument("--quality", default="overall", choices=[q.value for q in Quality])
    _add_policy_flags(p, with_gap=False)
    _add_backend_flags(p)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--output", help="output CSV path (default stdout)")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="annotator-split correlation analysis")
    p.add_argument("--annotations", required=True)
    p.add_argument("--scores", required=True, help="score JSONL from the score command")
    p.add_argument("--quality", default="overall", choices=[q.value for q in Quality])
    p.add_argument("--group-size", type=int, default=3)
    p.add_argument("--output", help="per-split CSV path (default stdout)")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("swap-sim", help="entity-swap sensitivity simulation")
    p.add_argument("--input", required=True)
    p.add_argument("--gaps", type=_int_list, default=[2, 6])
    p.add_argument("--seed", default="0")
    p.add_argument("--trials-per-pair", type=int, default=1)
    p.add_argument("--variant", default="accuracy", choices=[v.value for v in ScoreVariant])
    _add_policy_flags(p, with_gap=False)
    _add_backend_flags(p)
    p.add_argument("--output", help="trial JSONL path (default stdout)")
    p.add_argument("--summary-output", help="summary CSV path (default stderr)")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_swap_sim)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("score",) and not args.input and not (args.doc and args.summary):
        parser.error("score needs --input or both --doc and --summary")
    try:
        return args.func(args)
    except (BlancError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
