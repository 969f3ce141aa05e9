"""Command-line entry point.

Subcommands: validate, score, select, eval, scale, stats, sweep, synth.
Exit codes: 0 success, 1 usage error, 2 data error. All defaults match
the library defaults (top 1% / bottom 80% percentile thresholds, exit
window 2, confidence window 1024, top-10 logprobs, outlier tau 2.0,
50 scaling repeats), so a zero-flag run uses the standard setup.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .errors import ToolkitError
from .harness import (
    AccuracyRow,
    Report,
    emit_report,
    method_accuracy,
    pass_at_1,
    run_method,
    scaling_curve,
    separation_stats,
    sweep_grid,
)
from .phases import HepConfig, Thresholds, compute_thresholds, detect_heps
from .scoring import compute_centroid
from .selection import SelectionConfig, SelectionMethod, build_score_table, reduce_table
from .synth import SynthSpec, generate_corpus
from .traces import read_cache, trace_of, write_cache

logger = logging.getLogger("entropick")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_hep_flags(parser):
    parser.add_argument("--top-percent", type=float, default=0.01,
                        help="fraction of tokens counted as high entropy (default 0.01)")
    parser.add_argument("--bottom-percent", type=float, default=0.80,
                        help="quantile used for the phase exit threshold (default 0.80)")
    parser.add_argument("--exit-k", type=int, default=2,
                        help="consecutive low tokens that end a phase (default 2)")


def _add_selection_flags(parser, with_method=True):
    if with_method:
        parser.add_argument("--method", default="lowest_centroid",
                            choices=[m.value for m in SelectionMethod],
                            help="selection rule (default lowest_centroid)")
    parser.add_argument("--tau", type=float, default=2.0,
                        help="outlier cutoff in population std units; inf disables (default 2.0)")
    parser.add_argument("--no-structural-filter", action="store_true",
                        help="keep candidates with abnormal finish reasons")
    parser.add_argument("--window", type=int, default=1024,
                        help="confidence window size in tokens (default 1024)")
    parser.add_argument("--topk-confidence", type=int, default=10,
                        help="logprobs per token used for confidence (default 10)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument("--renormalize", action="store_true",
                        help="renormalize truncated top-k mass before entropy estimation")


def _hep_config(args) -> HepConfig:
    return HepConfig(
        top_percent=args.top_percent,
        bottom_percent=args.bottom_percent,
        exit_k=args.exit_k,
    )


def _selection_config(args, method=None) -> SelectionConfig:
    return SelectionConfig(
        method=SelectionMethod(method or getattr(args, "method", "lowest_centroid")),
        hep=_hep_config(args),
        outlier_tau=args.tau,
        structural_filter=not args.no_structural_filter,
        window_w=args.window,
        topk_for_confidence=args.topk_confidence,
        rng_seed=args.seed,
        renormalize=args.renormalize,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="entropick", description=__doc__)
    parser.add_argument("--version", action="version", version=f"entropick {__version__}")
    parser.add_argument("--log-level", default=os.environ.get("LOG", "WARNING"),
                        help="logging level (also honored via the LOG env var)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="schema-check a cache file")
    p.add_argument("cache")

    p = sub.add_parser("score", help="per-trajectory centroid and phase spans as JSONL")
    p.add_argument("cache")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    _add_hep_flags(p)
    p.add_argument("--renormalize", action="store_true",
                   help="renormalize truncated top-k mass before entropy estimation")
    p.add_argument("--include-entropies", action="store_true",
                   help="embed the per-token entropy trace in each row")
    p.add_argument("--abs-theta-high", type=float, default=None,
                   help="experimental: absolute entry threshold (requires --abs-theta-low)")
    p.add_argument("--abs-theta-low", type=float, default=None,
                   help="experimental: absolute exit threshold")

    p = sub.add_parser("select", help="pick one trajectory per problem")
    p.add_argument("cache")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    _add_hep_flags(p)
    _add_selection_flags(p)

    p = sub.add_parser("eval", help="accuracy table for a set of methods on a labeled cache")
    p.add_argument("cache")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--methods", default="lowest_centroid,random",
                   help="comma-separated methods; pass_at_1 allowed (default lowest_centroid,random)")
    p.add_argument("--dataset", default=None, help="dataset name for the report (default: cache stem)")
    _add_hep_flags(p)
    _add_selection_flags(p, with_method=False)

    p = sub.add_parser("scale", help="accuracy versus candidate budget (repeated subsampling)")
    p.add_argument("cache")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--n-grid", default="1,2,4,8,16,32,64",
                   help="comma-separated candidate budgets (default 1,2,4,8,16,32,64)")
    p.add_argument("--repeats", type=int, default=50,
                   help="resamples per budget (default 50)")
    p.add_argument("--methods", default="lowest_centroid,random")
    p.add_argument("--dataset", default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    _add_hep_flags(p)
    _add_selection_flags(p, with_method=False)

    p = sub.add_parser("stats", help="phase-position separation statistics per label group")
    p.add_argument("cache")
    p.add_argument("--out", required=True, help="JSON summary path; curves land next to it")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--sigma", type=float, default=2.0, help="smoothing width in bins (default 2.0)")
    _add_hep_flags(p)

    p = sub.add_parser("sweep", help="lowest-centroid accuracy over a hyperparameter grid")
    p.add_argument("cache")
    p.add_argument("--out", required=True)
    p.add_argument("--top-percents", default="0.005,0.01,0.02,0.05")
    p.add_argument("--bottom-percents", default="0.7,0.8,0.9")
    p.add_argument("--exit-ks", default="1,2,3,4")
    _add_selection_flags(p, with_method=False)

    p = sub.add_parser("synth", help="generate a synthetic labeled cache")
    p.add_argument("--out", required=True)
    p.add_argument("--spec-file", default=None,
                   help="JSON file with SynthSpec keys; flags below override nothing when used")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--problems", type=int, default=50)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--pattern", default="front_loaded",
                   choices=["front_loaded", "back_loaded", "uniform"])
    p.add_argument("--label-rule", default="front_is_correct",
                   choices=["front_is_correct", "independent"])
    p.add_argument("--label-p", type=float, default=0.5)
    p.add_argument("--length-range", default="400,800")
    p.add_argument("--burst-count-range", default="2,3")
    p.add_argument("--burst-length-range", default="6,10")
    p.add_argument("--base-entropy", type=float, default=0.5)
    p.add_argument("--burst-entropy", type=float, default=3.0)
    p.add_argument("--noise-std", type=float, default=0.2)
    p.add_argument("--front-fraction", type=float, default=0.5)
    p.add_argument("--spike-rate", type=float, default=0.0)
    p.add_argument("--spike-entropy", type=float, default=None)

    return parser


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _open_out(path: str):
    if path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8")


def _dataset_name(args) -> str:
    if getattr(args, "dataset", None):
        return args.dataset
    return os.path.splitext(os.path.basename(args.cache))[0]


def _cmd_validate(args) -> int:
    cache = read_cache(args.cache)
    labeled = sum(1 for r in cache.records() if r.label is not None)
    print(
        f"ok: {len(cache)} records across {len(cache.groups)} problems "
        f"({labeled} labeled)"
    )
    return 0


def _cmd_score(args) -> int:
    cache = read_cache(args.cache)
    cfg = _hep_config(args)
    absolute = None
    if (args.abs_theta_high is None) != (args.abs_theta_low is None):
        raise UsageError("--abs-theta-high and --abs-theta-low must be given together")
    if args.abs_theta_high is not None:
        absolute = Thresholds(theta_high=args.abs_theta_high, theta_low=args.abs_theta_low)
    out = _open_out(args.out)
    try:
        for rec in cache.records():
            trace = trace_of(rec, renormalize=args.renormalize)
            thresholds = absolute or compute_thresholds(trace, cfg)
            heps = detect_heps(trace, thresholds, cfg.exit_k)
            row = {
                "problem_id": rec.problem_id,
                "sample_id": rec.sample_id,
                "length": len(trace),
                "theta_high": thresholds.theta_high,
                "theta_low": thresholds.theta_low,
                "heps": [[h.start, h.end] for h in heps],
                "centroid": compute_centroid(heps, len(trace)) if heps else None,
            }
            if args.include_entropies:
                row["entropies"] = [float(v) for v in trace.values]
            out.write(json.dumps(row, separators=(",", ":")) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_select(args) -> int:
    cache = read_cache(args.cache)
    config = _selection_config(args)
    out = _open_out(args.out)
    try:
        for pid, group in cache.groups.items():
            table = build_score_table(pid, group, config)
            result = reduce_table(table, config)
            out.write(json.dumps(result.to_json_obj(), separators=(",", ":")) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _method_rows(cache, args, methods, dataset) -> list[AccuracyRow]:
    n_full = min(len(g) for g in cache.groups.values())
    rows = []
    for name in methods:
        if name == "pass_at_1":
            acc = pass_at_1(cache)
        else:
            acc = method_accuracy(cache, _selection_config(args, method=name))
        rows.append(
            AccuracyRow(
                method=name, dataset=dataset, n=n_full, repeats=1,
                mean_accuracy=acc, std_accuracy=0.0,
            )
        )
    return rows


def _cmd_eval(args) -> int:
    cache = read_cache(args.cache)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = _method_rows(cache, args, methods, _dataset_name(args))
    report = Report(rows=rows, meta={"seed": args.seed, "command": "eval"})
    for path in emit_report(report, args.out, format=args.format):
        logger.info("wrote %s", path)
    return 0


def _cmd_scale(args) -> int:
    cache = read_cache(args.cache)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    n_grid = _int_list(args.n_grid)
    dataset = _dataset_name(args)
    rows = []
    for name in methods:
        config = _selection_config(args, method=name)
        for point in scaling_curve(
            cache, config, n_grid, repeats=args.repeats, seed=args.seed, jobs=args.jobs
        ):
            rows.append(
                AccuracyRow(
                    method=name, dataset=dataset, n=point.n, repeats=point.repeats,
                    mean_accuracy=point.mean_accuracy, std_accuracy=point.std_accuracy,
                )
            )
    report = Report(rows=rows, meta={"seed": args.seed, "command": "scale"})
    emit_report(report, args.out, format=args.format)
    return 0


def _cmd_stats(args) -> int:
    cache = read_cache(args.cache)
    stats = separation_stats(
        cache, _hep_config(args), bins=args.bins, smoothing_sigma=args.sigma
    )
    summary = {
        "bins": stats.bins,
        "smoothing_sigma": stats.smoothing_sigma,
        "median_centroid_correct": stats.median_centroid_correct,
        "median_centroid_incorrect": stats.median_centroid_incorrect,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    curves = {}
    if stats.duration_correct is not None:
        curves["duration_correct"] = (stats.bin_centers, stats.duration_correct)
    if stats.duration_incorrect is not None:
        curves["duration_incorrect"] = (stats.bin_centers, stats.duration_incorrect)
    if stats.diff_smoothed is not None:
        curves["duration_diff_smoothed"] = (stats.bin_centers, stats.diff_smoothed)
    stem, _ = os.path.splitext(args.out)
    for name, (xs, ys) in sorted(curves.items()):
        with open(f"{stem}.{name}.csv", "w", encoding="utf-8") as fh:
            fh.write("bin_center,value\n")
            for x, y in zip(xs, ys):
                fh.write(f"{float(x)!r},{float(y)!r}\n")
    return 0


def _cmd_sweep(args) -> int:
    cache = read_cache(args.cache)
    config = SelectionConfig(
        method=SelectionMethod.LOWEST_CENTROID,
        outlier_tau=args.tau,
        structural_filter=not args.no_structural_filter,
        window_w=args.window,
        topk_for_confidence=args.topk_confidence,
        rng_seed=args.seed,
        renormalize=args.renormalize,
    )
    points = sweep_grid(
        cache,
        config,
        _float_list(args.top_percents),
        _float_list(args.bottom_percents),
        _int_list(args.exit_ks),
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("top_percent,bottom_percent,exit_k,accuracy\n")
        for pt in points:
            fh.write(f"{pt.top_percent!r},{pt.bottom_percent!r},{pt.exit_k},{pt.accuracy!r}\n")
    return 0


def _cmd_synth(args) -> int:
    if args.spec_file:
        with open(args.spec_file, "r", encoding="utf-8") as fh:
            spec = SynthSpec.from_dict(json.load(fh))
    else:
        spec = SynthSpec(
            seed=args.seed,
            pattern=args.pattern,
            length_range=tuple(_int_list(args.length_range)),
            burst_count_range=tuple(_int_list(args.burst_count_range)),
            burst_length_range=tuple(_int_list(args.burst_length_range)),
            base_entropy=args.base_entropy,
            burst_entropy=args.burst_entropy,
            noise_std=args.noise_std,
            label_rule=args.label_rule,
            label_p=args.label_p,
            front_fraction=args.front_fraction,
            spike_rate=args.spike_rate,
            spike_entropy=args.spike_entropy,
        )
    cache = generate_corpus(spec, problems=args.problems, samples_per_problem=args.samples)
    write_cache(cache, args.out)
    print(f"wrote {len(cache)} records to {args.out}")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "score": _cmd_score,
    "select": _cmd_select,
    "eval": _cmd_eval,
    "scale": _cmd_scale,
    "stats": _cmd_stats,
    "sweep": _cmd_sweep,
    "synth": _cmd_synth,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ToolkitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
