"""Command line: ``lfqtok <command> ...``.

Results are printed as ``key=value`` lines on stdout; logs go to stderr.
"""
from __future__ import annotations

import argparse
import math
import sys
from typing import Any, Dict, List, Optional, Sequence

from . import __version__, core
from .codec import format_value
from .errors import LfqtokError
from .selftest import all_passed, available_checks, run_checks, summary
from .utils.logging import set_level


def _format(value: Any) -> str:
    if isinstance(value, float):
        return format_value(value) if not math.isnan(value) else "nan"
    if isinstance(value, (list, tuple)) and value and isinstance(value[0], tuple):
        return ",".join(f"{a}:{b}" for a, b in value)
    return str(value)


def _emit(values: Dict[str, Any]) -> None:
    for key, value in values.items():
        print(f"{key}={_format(value)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfqtok",
        description="Lookup-free quantization video tokenizer: train, tokenize, detokenize and measure.",
    )
    parser.add_argument("-V", "--version", action="version", version=f"lfqtok {__version__}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default: $LFQTOK_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a tokenizer from a YAML config")
    p.add_argument("--config", help="training config (flat YAML)")
    p.add_argument("--out", required=True, help="checkpoint to write")
    p.add_argument("--metrics", default=None, help="JSON-lines metrics log (default: <out>.metrics.jsonl)")
    p.add_argument("--resume", default=None, help="continue from a training checkpoint instead of --config")

    p = sub.add_parser("tokenize", help="encode a video into a token bitstream")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="inp", required=True, help=".lfqv file or PNG directory")
    p.add_argument("--out", required=True)
    p.add_argument("--ema", action="store_true", help="use the EMA weights of a training checkpoint")

    p = sub.add_parser("detokenize", help="decode a token bitstream into a video")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True, help=".lfqv file, or a directory for PNG frames")
    p.add_argument("--ema", action="store_true")

    p = sub.add_parser("metrics", help="PSNR and MSE between two videos")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)

    p = sub.add_parser("inspect", help="print a bitstream header and token histogram")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--top", type=int, default=8)

    p = sub.add_parser("selftest", help="run the invariant checks")
    p.add_argument("checks", nargs="*", help=f"subset of: {', '.join(available_checks())}")
    return parser


def _run(args: argparse.Namespace) -> int:
    if args.command == "train":
        if not args.config and not args.resume:
            raise LfqtokError("train needs --config or --resume")
        _emit(core.train(args.config, args.out, args.metrics, args.resume))
    elif args.command == "tokenize":
        _emit(core.tokenize(args.ckpt, args.inp, args.out, use_ema=args.ema))
    elif args.command == "detokenize":
        _emit(core.detokenize(args.ckpt, args.inp, args.out, use_ema=args.ema))
    elif args.command == "metrics":
        _emit(core.compare(args.ref, args.test))
    elif args.command == "inspect":
        _emit(core.inspect(args.inp, args.top))
    elif args.command == "selftest":
        results = run_checks(args.checks or None)
        for r in results:
            print(f"{r.name}={'ok' if r.ok else 'FAIL'} {r.detail}")
        print(summary(results))
        return 0 if all_passed(results) else 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    if args.log_level:
        set_level(args.log_level)
    try:
        return _run(args)
    except (LfqtokError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
