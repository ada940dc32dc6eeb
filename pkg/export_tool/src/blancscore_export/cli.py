"""CLI: export a pretrained masked LM into a scoring bundle directory."""

from __future__ import annotations

import argparse
import sys

from .bundle import ExportVerificationFailed, ModelSourceError, export_bundle
from .graph_emit import UnsupportedArchitecture


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blancscore-export")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="convert a pretrained masked LM into a model bundle")
    p.add_argument("--model", required=True, help="model identifier or local checkpoint directory")
    p.add_argument("--out", required=True, help="bundle output directory")
    p.add_argument("--max-len", type=int, default=512)
    p.add_argument("--skip-verify", action="store_true", help="do not load-test the bundle via the scorer CLI")
    p.add_argument("--scorer-cli", default="blancscore")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = export_bundle(
            args.model,
            args.out,
            max_len=args.max_len,
            verify=not args.skip_verify,
            scorer_cli=args.scorer_cli,
        )
    except (ModelSourceError, UnsupportedArchitecture, ExportVerificationFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"bundle written to {args.out}: vocab {manifest.vocab_size}, max_len {manifest.max_len}, "
        f"source {manifest.source_model}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
