"""trace-export command line interface."""

from __future__ import annotations

import argparse
import logging
import sys

from .export import ExportJob, export
from .responses import ResponseFormatError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trace-export",
        description="Export top-k token logprobs from OpenAI-compatible "
                    "responses into trajectory-cache JSONL.",
    )
    parser.add_argument("--out", required=True, help="cache JSONL destination")
    parser.add_argument("--input-files", nargs="*", default=[],
                        help="saved response JSON files, one problem per file")
    parser.add_argument("--problem-ids", nargs="*", default=None,
                        help="problem ids matching --input-files (default: file stems)")
    parser.add_argument("--endpoint", default=None,
                        help="OpenAI-compatible base URL (live mode, e.g. http://host:8000/v1)")
    parser.add_argument("--model", default=None, help="model name for live requests")
    parser.add_argument("--prompts-file", default=None,
                        help="text file with one prompt per line (live mode)")
    parser.add_argument("--samples", type=int, default=64,
                        help="completions per prompt in live mode (default 64)")
    parser.add_argument("--temperature", type=float, default=0.7)
    parser.add_argument("--top-logprobs", type=int, default=10,
                        help="logprobs recorded per token, at most 10 (default 10)")
    parser.add_argument("--answer-pattern", default=None,
                        help=r"regex for short answers, e.g. \boxed\{([^}]*)\}")
    parser.add_argument("--log-level", default="WARNING")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING))
    prompts = []
    if args.prompts_file:
        with open(args.prompts_file, "r", encoding="utf-8") as fh:
            prompts = [line.strip() for line in fh if line.strip()]
    try:
        job = ExportJob(
            out_path=args.out,
            input_files=args.input_files,
            problem_ids=args.problem_ids,
            endpoint=args.endpoint,
            model=args.model,
            prompts=prompts,
            samples=args.samples,
            temperature=args.temperature,
            top_logprobs=args.top_logprobs,
            answer_pattern=args.answer_pattern,
        )
        stats = export(job)
    except (ResponseFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {stats.records} records to {args.out}"
          + (f" ({stats.skipped} skipped)" if stats.skipped else ""))
    return 0


def main() -> None:
    sys.exit(run())
