"""Best-of-N candidate selection: lowest-centroid plus baselines.

All selectors are deterministic given their inputs and seed; every tie
breaks toward the lowest sample_id. The outlier filter used by the
centroid methods is advisory: it never leaves an empty pool.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyPoolError, NoCentroidError, UnsupportedPayloadError
from .phases import HepConfig
from .scoring import raw_entropy_centroid, score_trace
from .traces import TokenLogprobs, TrajectoryRecord, trace_of

REASON_STRUCTURAL = "structural"
REASON_NO_CENTROID = "no-centroid"
REASON_OUTLIER = "centroid-outlier"


class SelectionMethod(str, enum.Enum):
    LOWEST_CENTROID = "lowest_centroid"
    RAW_CENTROID = "raw_centroid"
    SELF_CERTAINTY = "self_certainty"
    TAIL_CONFIDENCE = "tail_confidence"
    BOTTOM_WINDOW = "bottom_window"
    RANDOM = "random"
    MAJORITY_VOTE = "majority_vote"


# Methods whose score is minimized and that run the outlier filter first.
_CENTROID_METHODS = frozenset({SelectionMethod.LOWEST_CENTROID, SelectionMethod.RAW_CENTROID})
# Confidence methods need per-token logprobs, not precomputed entropies.
_LOGPROB_METHODS = frozenset({SelectionMethod.TAIL_CONFIDENCE, SelectionMethod.BOTTOM_WINDOW})


@dataclass(frozen=True)
class SelectionConfig:
    method: SelectionMethod = SelectionMethod.LOWEST_CENTROID
    hep: HepConfig = HepConfig()
    outlier_tau: float = 2.0
    structural_filter: bool = True
    window_w: int = 1024
    topk_for_confidence: int = 10
    rng_seed: int = 0
    renormalize: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", SelectionMethod(self.method))
        if self.window_w < 1:
            raise ValueError("window_w must be >= 1")
        if not self.outlier_tau > 0:
            raise ValueError("outlier_tau must be > 0")
        if self.topk_for_confidence < 1:
            raise ValueError("topk_for_confidence must be >= 1")


@dataclass(frozen=True)
class Dropped:
    sample_id: int
    reason: str


@dataclass(frozen=True)
class FilterOutcome:
    survivors: tuple[int, ...]
    dropped: tuple[Dropped, ...]
    restored: bool = False


@dataclass(frozen=True)
class SelectionResult:
    problem_id: str
    method: str
    chosen_sample_id: int
    scores: dict[int, float | None]
    filtered: tuple[Dropped, ...] = ()
    restored: bool = False

    def to_json_obj(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "method": self.method,
            "chosen_sample_id": self.chosen_sample_id,
            "scores": {str(k): self.scores[k] for k in sorted(self.scores)},
            "filtered": [
                {"sample_id": d.sample_id, "reason": d.reason} for d in self.filtered
            ],
        }


def filter_outliers(
    scores: Mapping[int, float | None],
    abnormal: Mapping[int, bool] | None = None,
    outlier_tau: float = 2.0,
    structural_filter: bool = True,
) -> FilterOutcome:
    """Two-stage advisory filter over candidate centroids.

    Stage one drops structurally abnormal candidates, stage two drops
    centroids further than ``outlier_tau`` population standard deviations
    from the mean of the stage-one survivors. Candidates without a
    centroid are dropped as well. If everything would be dropped, the
    whole pool is restored instead.
    """
    ids = sorted(scores)
    if not ids:
        raise EmptyPoolError("no candidates to filter")
    abnormal = abnormal or {}

    dropped: list[Dropped] = []
    pool = []
    for sid in ids:
        if structural_filter and abnormal.get(sid, False):
            dropped.append(Dropped(sid, REASON_STRUCTURAL))
        else:
            pool.append(sid)

    scored = []
    for sid in pool:
        value = scores[sid]
        if value is None or (isinstance(value, float) and math.isnan(value)):
            dropped.append(Dropped(sid, REASON_NO_CENTROID))
        else:
            scored.append(sid)

    survivors = scored
    if scored:
        values = np.asarray([scores[sid] for sid in scored], dtype=np.float64)
        mean = float(values.mean())
        std = float(values.std())  # population std
        cutoff = outlier_tau * std
        survivors = []
        for sid, value in zip(scored, values):
            deviation = abs(float(value) - mean)
            if deviation > cutoff:  # false for nan cutoff (tau=inf, std=0)
                dropped.append(Dropped(sid, REASON_OUTLIER))
            else:
                survivors.append(sid)

    if not survivors:
        return FilterOutcome(survivors=tuple(ids), dropped=(), restored=True)
    return FilterOutcome(survivors=tuple(survivors), dropped=tuple(dropped))


def token_confidence(values: Sequence[float] | TokenLogprobs, k_top: int = 10) -> float:
    """Negative mean of a token's top-k logprobs (clamped to what exists)."""
    if isinstance(values, TokenLogprobs):
        values = values.values
    k = min(k_top, len(values))
    if k < 1:
        raise ValueError("token carries no logprobs")
    return -float(np.mean(np.asarray(values[:k], dtype=np.float64)))


def _confidence_series(record: TrajectoryRecord, method: SelectionMethod, k_top: int) -> np.ndarray:
    if record.topk_logprobs is None:
        raise UnsupportedPayloadError(
            method.value, f"record {record.problem_id}/{record.sample_id} carries "
            "precomputed entropies; per-token logprobs are required",
        )
    return np.asarray([token_confidence(tok, k_top) for tok in record.topk_logprobs])


def _normalize_answer(answer: str) -> str:
    return answer.strip().casefold()


@dataclass(frozen=True)
class ScoreTable:
    """Per-candidate scalars for one problem, precomputed once.

    ``values`` holds the method score per candidate (NaN when a candidate
    has no score, e.g. no centroid). For majority voting, ``values`` are
    centroids used to break ties while ``answers`` drive the vote.
    """

    problem_id: str
    method: SelectionMethod
    sample_ids: tuple[int, ...]
    values: np.ndarray
    abnormal: np.ndarray
    labels: tuple[bool | None, ...]
    answers: tuple[str | None, ...] = ()
    maximize: bool = False
    filtered: bool = False


def build_score_table(
    problem_id: str, records: Sequence[TrajectoryRecord], config: SelectionConfig
) -> ScoreTable:
    """Compute the per-candidate score vector for ``config.method``."""
    if not records:
        raise EmptyPoolError(f"problem {problem_id!r} has no candidates")
    records = sorted(records, key=lambda r: r.sample_id)
    method = config.method
    n = len(records)
    values = np.full(n, np.nan)
    answers: tuple[str | None, ...] = ()
    maximize = False
    filtered = False

    if method in _CENTROID_METHODS or method is SelectionMethod.MAJORITY_VOTE:
        filtered = method in _CENTROID_METHODS
        for i, rec in enumerate(records):
            trace = trace_of(rec, renormalize=config.renormalize)
            try:
                if method is SelectionMethod.RAW_CENTROID:
                    values[i] = raw_entropy_centroid(trace)
                else:
                    values[i] = score_trace(trace, config.hep).value
            except NoCentroidError:
                pass
        if method is SelectionMethod.MAJORITY_VOTE:
            if any(rec.answer is None for rec in records):
                missing = next(r.sample_id for r in records if r.answer is None)
                raise UnsupportedPayloadError(
                    method.value,
                    f"candidate {problem_id}/{missing} carries no extracted answer",
                )
            answers = tuple(_normalize_answer(rec.answer) for rec in records)
    elif method is SelectionMethod.SELF_CERTAINTY:
        for i, rec in enumerate(records):
            trace = trace_of(rec, renormalize=config.renormalize)
            values[i] = -float(trace.values.mean())
        maximize = True
    elif method in _LOGPROB_METHODS:
        for i, rec in enumerate(records):
            conf = _confidence_series(rec, method, config.topk_for_confidence)
            w = min(config.window_w, conf.size)
            if method is SelectionMethod.TAIL_CONFIDENCE:
                values[i] = float(conf[-w:].mean())
            else:
                sums = np.convolve(conf, np.ones(w), mode="valid")
                values[i] = float(sums.min() / w)
        maximize = True
    elif method is SelectionMethod.RANDOM:
        pass
    else:  # pragma: no cover
        raise ValueError(f"unhandled method {method}")

    return ScoreTable(
        problem_id=problem_id,
        method=method,
        sample_ids=tuple(r.sample_id for r in records),
        values=values,
        abnormal=np.asarray([r.abnormal for r in records]),
        labels=tuple(r.label for r in records),
        answers=answers,
        maximize=maximize,
        filtered=filtered,
    )


def _argbest(ids: Sequence[int], values: Sequence[float], maximize: bool) -> int:
    """Best id; ids must be ascending so the first of a tie is the lowest."""
    best_id = None
    best_value = None
    for sid, value in zip(ids, values):
        if value is None or math.isnan(value):
            continue
        if best_value is None or (value > best_value if maximize else value < best_value):
            best_id = sid
            best_value = value
    if best_id is None:
        raise EmptyPoolError("no candidate has a usable score")
    return best_id


def reduce_table(
    table: ScoreTable,
    config: SelectionConfig,
    subset: Sequence[int] | None = None,
    rng: np.random.Generator | None = None,
) -> SelectionResult:
    """Select within ``subset`` (positions into the table; default all)."""
    if subset is None:
        pos = np.arange(len(table.sample_ids))
    else:
        pos = np.sort(np.asarray(subset, dtype=np.int64))
    if pos.size == 0:
        raise EmptyPoolError(f"problem {table.problem_id!r} has no candidates")
    ids = [table.sample_ids[i] for i in pos]
    values = [float(table.values[i]) for i in pos]
    score_map = {sid: (None if math.isnan(v) else v) for sid, v in zip(ids, values)}

    method = table.method
    if method is SelectionMethod.RANDOM:
        if rng is None:
            rng = np.random.default_rng(config.rng_seed)
        chosen = ids[int(rng.integers(len(ids)))]
        return SelectionResult(table.problem_id, method.value, chosen, {sid: None for sid in ids})

    if method is SelectionMethod.MAJORITY_VOTE:
        return _majority_reduce(table, pos, ids, values)

    filtered: tuple[Dropped, ...] = ()
    restored = False
    pool = ids
    if table.filtered:
        outcome = filter_outliers(
            score_map,
            abnormal={sid: bool(table.abnormal[i]) for sid, i in zip(ids, pos)},
            outlier_tau=config.outlier_tau,
            structural_filter=config.structural_filter,
        )
        pool = list(outcome.survivors)
        filtered = outcome.dropped
        restored = outcome.restored

    chosen = _argbest(pool, [score_map[sid] for sid in pool], table.maximize)
    return SelectionResult(
        table.problem_id, method.value, chosen, score_map, filtered, restored
    )


def _majority_reduce(table: ScoreTable, pos, ids, centroids) -> SelectionResult:
    groups: dict[str, list[int]] = {}
    for i, sid in zip(pos, ids):
        groups.setdefault(table.answers[i], []).append(sid)
    top_count = max(len(members) for members in groups.values())
    tied = [answer for answer, members in groups.items() if len(members) == top_count]

    centroid_of = {sid: c for sid, c in zip(ids, centroids)}

    def group_key(answer: str):
        # Lowest-centroid member decides among tied answers.
        return min(
            (c if not math.isnan(c) else math.inf, sid)
            for sid, c in ((m, centroid_of[m]) for m in groups[answer])
        )

    winner = min(tied, key=group_key)
    chosen = min(
        groups[winner],
        key=lambda sid: (
            centroid_of[sid] if not math.isnan(centroid_of[sid]) else math.inf,
            sid,
        ),
    )
    votes = {sid: float(len(groups[table.answers[i]])) for i, sid in zip(pos, ids)}
    return SelectionResult(table.problem_id, table.method.value, chosen, votes)


def select(
    records: Sequence[TrajectoryRecord],
    config: SelectionConfig,
    rng: np.random.Generator | None = None,
) -> SelectionResult:
    """Score and select among one problem's candidates."""
    problem_id = records[0].problem_id if records else ""
    table = build_score_table(problem_id, records, config)
    return reduce_table(table, config, rng=rng)


def _with_method(config: SelectionConfig | None, method: SelectionMethod) -> SelectionConfig:
    if config is None:
        return SelectionConfig(method=method)
    return replace(config, method=method)


def lowest_centroid_select(records, config: SelectionConfig | None = None) -> SelectionResult:
    return select(records, _with_method(config, SelectionMethod.LOWEST_CENTROID))


def raw_centroid_select(records, config: SelectionConfig | None = None) -> SelectionResult:
    return select(records, _with_method(config, SelectionMethod.RAW_CENTROID))


def self_certainty_select(records, config: SelectionConfig | None = None) -> SelectionResult:
    return select(records, _with_method(config, SelectionMethod.SELF_CERTAINTY))


def tail_confidence_select(records, config: SelectionConfig | None = None) -> SelectionResult:
    return select(records, _with_method(config, SelectionMethod.TAIL_CONFIDENCE))


def bottom_window_select(records, config: SelectionConfig | None = None) -> SelectionResult:
    return select(records, _with_method(config, SelectionMethod.BOTTOM_WINDOW))


def random_select(records, rng_seed: int = 0) -> SelectionResult:
    config = SelectionConfig(method=SelectionMethod.RANDOM, rng_seed=rng_seed)
    return select(records, config)


def majority_vote(records, config: SelectionConfig | None = None) -> SelectionResult:
    return select(records, _with_method(config, SelectionMethod.MAJORITY_VOTE))
