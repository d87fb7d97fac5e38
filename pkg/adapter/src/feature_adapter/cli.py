"""Command line: `adapter extract --seq DIR --what depth|emb|masks|all`.

Exit codes: 0 success, 1 input/validation error, 2 internal error.
Diagnostics on stderr, prefixed "error:"/"warn:".
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .extract import extract_depth, extract_embeddings, extract_masks


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapter",
        description="Extract perception sidecars from a frame directory.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="run extraction passes")
    p.add_argument("--seq", required=True,
                   help="sequence directory (frames + det.txt)")
    p.add_argument("--what", required=True,
                   choices=("depth", "emb", "masks", "all"))
    p.add_argument("--config", help="key=value adapter config file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        seq = Path(args.seq)
        if args.what in ("depth", "all"):
            n = extract_depth(seq, config)
            print(f"depth: {n} frames")
        if args.what in ("emb", "all"):
            n = extract_embeddings(seq, config)
            print(f"embeddings: {n} records")
        if args.what in ("masks", "all"):
            n = extract_masks(seq, config)
            print(f"masks: {n} lines")
        return 0
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - invariant violations
        print(f"error: internal: {e!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
