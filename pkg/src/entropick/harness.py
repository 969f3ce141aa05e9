"""Accuracy accounting, scaling curves, and separation statistics.

Accuracy is macro-averaged over problems. Subsampling for scaling curves
draws without replacement with a dedicated RNG stream per (seed, n,
repeat, problem), so results do not depend on scheduling or worker
count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import InfeasibleSampleError, MissingLabelError, ToolkitError
from .phases import HepConfig, compute_thresholds, detect_heps
from .scoring import compute_centroid
from .selection import ScoreTable, SelectionConfig, build_score_table, reduce_table
from .traces import TrajectoryCache, trace_of

logger = logging.getLogger(__name__)


def _require_labels(cache: TrajectoryCache) -> None:
    for rec in cache.records():
        if rec.label is None:
            raise MissingLabelError(
                f"record {rec.problem_id}/{rec.sample_id} carries no label"
            )


def pass_at_1(cache: TrajectoryCache) -> float:
    """Expected single-sample accuracy: per-problem label mean, then
    macro-mean over problems."""
    _require_labels(cache)
    rates = [
        float(np.mean([bool(r.label) for r in group])) for group in cache.groups.values()
    ]
    if not rates:
        raise MissingLabelError("cache is empty")
    return float(np.mean(rates))


@dataclass(frozen=True)
class MethodRun:
    method: str
    accuracy: float
    problems_evaluated: int
    problems_skipped: tuple[str, ...] = ()


def _score_tables(cache: TrajectoryCache, config: SelectionConfig):
    tables: dict[str, ScoreTable] = {}
    skipped: list[str] = []
    for pid, group in cache.groups.items():
        try:
            tables[pid] = build_score_table(pid, group, config)
        except ToolkitError as exc:
            logger.warning("skipping problem %s for %s: %s", pid, config.method.value, exc)
            skipped.append(pid)
    return tables, skipped


def run_method(cache: TrajectoryCache, config: SelectionConfig) -> MethodRun:
    """Select per problem on the full candidate sets and score correctness."""
    _require_labels(cache)
    tables, skipped = _score_tables(cache, config)
    correct = 0
    evaluated = 0
    for pid, table in tables.items():
        try:
            result = reduce_table(table, config)
        except ToolkitError as exc:
            logger.warning("skipping problem %s for %s: %s", pid, config.method.value, exc)
            skipped.append(pid)
            continue
        idx = table.sample_ids.index(result.chosen_sample_id)
        correct += bool(table.labels[idx])
        evaluated += 1
    if evaluated == 0:
        raise ToolkitError(f"no problem could be evaluated for {config.method.value}")
    return MethodRun(
        method=config.method.value,
        accuracy=correct / evaluated,
        problems_evaluated=evaluated,
        problems_skipped=tuple(skipped),
    )


def method_accuracy(cache: TrajectoryCache, config: SelectionConfig) -> float:
    return run_method(cache, config).accuracy


def filter_impact(cache: TrajectoryCache, config: SelectionConfig) -> float:
    """Accuracy with the outlier filter as configured minus accuracy with
    every filtering stage disabled."""
    enabled = method_accuracy(cache, config)
    disabled = method_accuracy(
        cache, replace(config, structural_filter=False, outlier_tau=math.inf)
    )
    return enabled - disabled


@dataclass(frozen=True)
class ScalingPoint:
    n: int
    repeats: int
    mean_accuracy: float
    std_accuracy: float


def _problem_stream_id(problem_id: str) -> int:
    digest = hashlib.sha256(problem_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _scaling_one_n(args) -> ScalingPoint:
    tables, config, n, repeats, seed = args
    accs = np.empty(repeats)
    for rep in range(repeats):
        correct = 0
        evaluated = 0
        for pid, table in tables.items():
            root = np.random.SeedSequence(
                [seed, n, rep, _problem_stream_id(pid)]
            )
            draw_ss, select_ss = root.spawn(2)
            draw_rng = np.random.default_rng(draw_ss)
            size = len(table.sample_ids)
            subset = draw_rng.choice(size, size=n, replace=False)
            try:
                result = reduce_table(
                    table, config, subset=subset, rng=np.random.default_rng(select_ss)
                )
            except ToolkitError:
                continue
            idx = table.sample_ids.index(result.chosen_sample_id)
            correct += bool(table.labels[idx])
            evaluated += 1
        accs[rep] = correct / evaluated if evaluated else float("nan")
    mean = float(np.nanmean(accs))
    std = float(np.nanstd(accs))  # population std over repeats
    return ScalingPoint(n=n, repeats=repeats, mean_accuracy=mean, std_accuracy=std)


def scaling_curve(
    cache: TrajectoryCache,
    config: SelectionConfig,
    n_grid: Sequence[int],
    repeats: int = 50,
    seed: int = 0,
    jobs: int = 1,
) -> list[ScalingPoint]:
    """Accuracy versus candidate budget, ``repeats`` resamples per point."""
    _require_labels(cache)
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    sizes = {pid: len(group) for pid, group in cache.groups.items()}
    for n in n_grid:
        if n < 1:
            raise ValueError("every n must be >= 1")
        for pid, size in sizes.items():
            if n > size:
                raise InfeasibleSampleError(pid, requested=n, available=size)
    tables, skipped = _score_tables(cache, config)
    if skipped:
        logger.warning("scaling curve skips %d problems entirely", len(skipped))
    if not tables:
        raise ToolkitError("no scorable problems")
    work = [(tables, config, int(n), repeats, seed) for n in n_grid]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_scaling_one_n, work))
    else:
        points = [_scaling_one_n(item) for item in work]
    return points


@dataclass(frozen=True)
class SeparationStats:
    """Where phases sit along correct versus incorrect trajectories."""

    bins: int
    smoothing_sigma: float
    bin_centers: np.ndarray
    median_centroid_correct: float | None
    median_centroid_incorrect: float | None
    duration_correct: np.ndarray | None
    duration_incorrect: np.ndarray | None
    count_correct: np.ndarray | None
    count_incorrect: np.ndarray | None
    diff_smoothed: np.ndarray | None


def gaussian_smooth(values: np.ndarray, sigma: float) -> np.ndarray:
    """Truncated-Gaussian smoothing (radius 3 sigma) with edge
    renormalization; sigma below 1e-6 is the identity."""
    values = np.asarray(values, dtype=np.float64)
    if sigma < 1e-6:
        return values.copy()
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1)
    kernel = np.exp(-(offsets.astype(np.float64) ** 2) / (2.0 * sigma * sigma))
    smoothed = np.convolve(values, kernel, mode="same")
    coverage = np.convolve(np.ones_like(values), kernel, mode="same")
    return smoothed / coverage


def separation_stats(
    cache: TrajectoryCache,
    hep_cfg: HepConfig = HepConfig(),
    bins: int = 50,
    smoothing_sigma: float = 2.0,
) -> SeparationStats:
    """Binned phase-duration curves and centroid medians per label group."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    _require_labels(cache)
    sums = {True: np.zeros(bins), False: np.zeros(bins)}
    counts = {True: np.zeros(bins), False: np.zeros(bins)}
    centroids: dict[bool, list[float]] = {True: [], False: []}
    for rec in cache.records():
        trace = trace_of(rec)
        thresholds = compute_thresholds(trace, hep_cfg)
        heps = detect_heps(trace, thresholds, hep_cfg.exit_k)
        length = len(trace)
        label = bool(rec.label)
        for hep in heps:
            b = min(int(hep.position / length * bins), bins - 1)
            sums[label][b] += hep.mass
            counts[label][b] += 1
        if heps:
            centroids[label].append(compute_centroid(heps, length))

    def group(label: bool):
        if not centroids[label]:
            return None, None, None
        mean = np.where(counts[label] > 0, sums[label] / np.maximum(counts[label], 1), 0.0)
        return float(np.median(centroids[label])), mean, counts[label]

    median_c, dur_c, cnt_c = group(True)
    median_i, dur_i, cnt_i = group(False)
    diff = None
    if dur_c is not None and dur_i is not None:
        diff = gaussian_smooth(dur_c - dur_i, smoothing_sigma)
    centers = (np.arange(bins) + 0.5) / bins
    return SeparationStats(
        bins=bins,
        smoothing_sigma=smoothing_sigma,
        bin_centers=centers,
        median_centroid_correct=median_c,
        median_centroid_incorrect=median_i,
        duration_correct=dur_c,
        duration_incorrect=dur_i,
        count_correct=cnt_c,
        count_incorrect=cnt_i,
        diff_smoothed=diff,
    )


@dataclass(frozen=True)
class SweepPoint:
    top_percent: float
    bottom_percent: float
    exit_k: int
    accuracy: float


def sweep_grid(
    cache: TrajectoryCache,
    config: SelectionConfig,
    top_percents: Sequence[float],
    bottom_percents: Sequence[float],
    exit_ks: Sequence[int],
) -> list[SweepPoint]:
    """Lowest-centroid accuracy over a grid of phase hyperparameters."""
    points = []
    for top in top_percents:
        for bottom in bottom_percents:
            for k in exit_ks:
                cfg = replace(
                    config, hep=HepConfig(top_percent=top, bottom_percent=bottom, exit_k=k)
                )
                points.append(
                    SweepPoint(top, bottom, k, method_accuracy(cache, cfg))
                )
    return points


@dataclass(frozen=True)
class AccuracyRow:
    method: str
    dataset: str
    n: int
    repeats: int
    mean_accuracy: float
    std_accuracy: float


@dataclass
class Report:
    rows: list[AccuracyRow] = field(default_factory=list)
    curves: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    meta: dict[str, object] = field(default_factory=dict)


CSV_HEADER = ["method", "dataset", "n", "R", "mean_accuracy", "std_accuracy"]
CURVE_HEADER = "bin_center,value"


def _curve_path(path: str, name: str) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}.{name}.csv"


def emit_report(report: Report, path: str | os.PathLike, format: str = "csv") -> list[str]:
    """Write the accuracy table and any curves; returns the files written.

    CSV mode writes the fixed-column table at ``path`` and one
    ``bin_center,value`` file per curve next to it. JSON mode writes a
    single self-contained file.
    """
    if not report.rows and not report.curves:
        raise ValueError("report is empty")
    spath = os.fspath(path)
    written = [spath]
    if format == "csv":
        with open(spath, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for row in report.rows:
                writer.writerow(
                    [
                        row.method,
                        row.dataset,
                        row.n,
                        row.repeats,
                        repr(row.mean_accuracy),
                        repr(row.std_accuracy),
                    ]
                )
        for name in sorted(report.curves):
            xs, ys = report.curves[name]
            cpath = _curve_path(spath, name)
            with open(cpath, "w", encoding="utf-8") as fh:
                fh.write(CURVE_HEADER + "\n")
                for x, y in zip(xs, ys):
                    fh.write(f"{float(x)!r},{float(y)!r}\n")
            written.append(cpath)
    elif format == "json":
        obj = {
            "accuracy": [
                {
                    "method": r.method,
                    "dataset": r.dataset,
                    "n": r.n,
                    "R": r.repeats,
                    "mean_accuracy": r.mean_accuracy,
                    "std_accuracy": r.std_accuracy,
                }
                for r in report.rows
            ],
            "curves": {
                name: [[float(x), float(y)] for x, y in zip(xs, ys)]
                for name, (xs, ys) in sorted(report.curves.items())
            },
            "meta": report.meta,
        }
        with open(spath, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        raise ValueError(f"unknown report format {format!r}")
    return written


def load_report_json(path: str | os.PathLike) -> Report:
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    rows = [
        AccuracyRow(
            method=r["method"],
            dataset=r["dataset"],
            n=int(r["n"]),
            repeats=int(r["R"]),
            mean_accuracy=float(r["mean_accuracy"]),
            std_accuracy=float(r["std_accuracy"]),
        )
        for r in obj.get("accuracy", [])
    ]
    curves = {
        name: (
            np.asarray([p[0] for p in pts]),
            np.asarray([p[1] for p in pts]),
        )
        for name, pts in obj.get("curves", {}).items()
    }
    return Report(rows=rows, curves=curves, meta=obj.get("meta", {}))
