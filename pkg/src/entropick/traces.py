"""Trajectory records, the JSONL cache format, and entropy estimation.

A trajectory is one sampled model response, carried either as per-token
top-k logprobs or as a precomputed per-token entropy trace (nats). Caches
group trajectories by problem and round-trip losslessly through JSONL.
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import CacheParseError, DuplicateRecordError, MalformedTraceError

TOPK_LIMIT = 10

_KNOWN_FIELDS = frozenset(
    {"problem_id", "sample_id", "topk_logprobs", "entropies", "finish_reason", "label", "answer"}
)


class FinishReason(str, enum.Enum):
    STOP = "stop"
    LENGTH = "length"
    REPETITION = "repetition"
    OTHER = "other"


def _as_float_array(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise MalformedTraceError(f"{what} must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise MalformedTraceError(f"{what} contains non-finite values")
    return arr


@dataclass(frozen=True)
class TokenLogprobs:
    """Top-k log-probabilities (natural log) for one generated token.

    Values are descending and non-positive; at most ``TOPK_LIMIT`` entries,
    matching typical inference-server truncation.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        arr = _as_float_array(self.values, "token logprobs")
        if arr.size > TOPK_LIMIT:
            raise MalformedTraceError(
                f"token carries {arr.size} logprobs; at most {TOPK_LIMIT} supported"
            )
        if np.any(arr > 0.0):
            raise MalformedTraceError("logprobs must be <= 0")
        if np.any(np.diff(arr) > 0.0):
            raise MalformedTraceError("logprobs must be sorted descending")
        object.__setattr__(self, "values", tuple(float(v) for v in arr))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class EntropyTrace:
    """Per-token entropy sequence in nats; nonempty, finite, non-negative."""

    values: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.values, "entropy trace")
        if np.any(arr < 0.0):
            raise MalformedTraceError("entropies must be >= 0")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EntropyTrace):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((len(self), float(self.values[0]), float(self.values[-1])))


def entropy_from_topk(values: Sequence[float] | TokenLogprobs, renormalize: bool = False) -> float:
    """Shannon entropy (nats) of a truncated top-k token distribution.

    By default the exponentiated logprobs are used as-is, without
    renormalizing the truncated mass to 1; pass ``renormalize=True`` to
    condition on the retained tokens instead. Underflowed probabilities
    contribute zero.
    """
    if isinstance(values, TokenLogprobs):
        arr = np.asarray(values.values, dtype=np.float64)
    else:
        arr = _as_float_array(values, "token logprobs")
        if np.any(arr > 0.0):
            raise MalformedTraceError("logprobs must be <= 0")
    arr = np.sort(arr)  # canonical summation order: bit-exact under permutation
    probs = np.exp(arr)
    if renormalize:
        total = probs.sum()
        if total <= 0.0:
            return 0.0
        probs = probs / total
        arr = arr - math.log(total)
    terms = np.where(probs > 0.0, probs * arr, 0.0)
    return float(max(0.0, -terms.sum()))


@dataclass(frozen=True)
class TrajectoryRecord:
    """One sampled response: identity, payload, termination status, labels.

    Exactly one of ``topk_logprobs`` / ``entropies`` is set. ``extra``
    carries unknown wire fields so they survive a read/write round trip.
    """

    problem_id: str
    sample_id: int
    finish_reason: FinishReason = FinishReason.STOP
    topk_logprobs: tuple[TokenLogprobs, ...] | None = None
    entropies: EntropyTrace | None = None
    label: bool | None = None
    answer: str | None = None
    extra: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.problem_id, str) or not self.problem_id:
            raise MalformedTraceError("problem_id must be a nonempty string")
        if type(self.sample_id) is not int or self.sample_id < 0:
            raise MalformedTraceError("sample_id must be a non-negative integer")
        if (self.topk_logprobs is None) == (self.entropies is None):
            raise MalformedTraceError(
                "record must carry exactly one of topk_logprobs or entropies"
            )
        if self.topk_logprobs is not None and len(self.topk_logprobs) == 0:
            raise MalformedTraceError("topk_logprobs payload must be nonempty")
        object.__setattr__(self, "finish_reason", FinishReason(self.finish_reason))
        object.__setattr__(self, "extra", dict(self.extra))

    @property
    def length(self) -> int:
        if self.entropies is not None:
            return len(self.entropies)
        return len(self.topk_logprobs)

    @property
    def abnormal(self) -> bool:
        """True when generation did not terminate with a normal stop."""
        return self.finish_reason is not FinishReason.STOP


def trace_of(record: TrajectoryRecord, renormalize: bool = False) -> EntropyTrace:
    """Entropy trace of a record: stored entropies verbatim, or estimated
    per token from the top-k logprobs."""
    if record.entropies is not None:
        return record.entropies
    values = [entropy_from_topk(tok, renormalize=renormalize) for tok in record.topk_logprobs]
    return EntropyTrace(np.asarray(values))


@dataclass(frozen=True)
class TrajectoryCache:
    """Trajectories grouped by problem_id, each group ordered by sample_id."""

    groups: dict[str, tuple[TrajectoryRecord, ...]]

    @classmethod
    def from_records(cls, records: Iterable[TrajectoryRecord]) -> "TrajectoryCache":
        seen: set[tuple[str, int]] = set()
        groups: dict[str, list[TrajectoryRecord]] = {}
        for rec in records:
            key = (rec.problem_id, rec.sample_id)
            if key in seen:
                raise DuplicateRecordError(f"duplicate record key {key}")
            seen.add(key)
            groups.setdefault(rec.problem_id, []).append(rec)
        return cls(
            {
                pid: tuple(sorted(grp, key=lambda r: r.sample_id))
                for pid, grp in sorted(groups.items())
            }
        )

    @property
    def problem_ids(self) -> tuple[str, ...]:
        return tuple(self.groups)

    def records(self) -> Iterator[TrajectoryRecord]:
        for pid in sorted(self.groups):
            yield from self.groups[pid]

    def __len__(self) -> int:
        return sum(len(g) for g in self.groups.values())

    def fully_labeled(self) -> bool:
        return all(r.label is not None for r in self.records())


def _record_from_json(obj: dict, line_no: int, path: str | None) -> TrajectoryRecord:
    def fail(msg: str):
        raise CacheParseError(msg, line=line_no, path=path)

    if not isinstance(obj, dict):
        fail("record must be a JSON object")
    problem_id = obj.get("problem_id")
    if not isinstance(problem_id, str) or not problem_id:
        fail("problem_id must be a nonempty string")
    sample_id = obj.get("sample_id")
    if type(sample_id) is not int or sample_id < 0:
        fail("sample_id must be a non-negative integer")

    has_topk = "topk_logprobs" in obj
    has_ent = "entropies" in obj
    if has_topk == has_ent:
        fail("record must carry exactly one of topk_logprobs / entropies")

    topk = None
    ent = None
    try:
        if has_topk:
            raw = obj["topk_logprobs"]
            if not isinstance(raw, list) or not raw:
                fail("topk_logprobs must be a nonempty array of arrays")
            topk = tuple(TokenLogprobs(tuple(tok)) for tok in raw)
        else:
            raw = obj["entropies"]
            if not isinstance(raw, list) or not raw:
                fail("entropies must be a nonempty array of numbers")
            ent = EntropyTrace(np.asarray(raw, dtype=np.float64))
    except (MalformedTraceError, TypeError, ValueError) as exc:
        fail(f"bad payload: {exc}")

    reason_raw = obj.get("finish_reason")
    try:
        reason = FinishReason(reason_raw)
    except ValueError:
        fail(f"finish_reason must be one of {[r.value for r in FinishReason]}, got {reason_raw!r}")

    label = obj.get("label")
    if label is not None and not isinstance(label, bool):
        fail("label must be a boolean when present")
    answer = obj.get("answer")
    if answer is not None and not isinstance(answer, str):
        fail("answer must be a string when present")

    extra = {k: v for k, v in obj.items() if k not in _KNOWN_FIELDS}
    return TrajectoryRecord(
        problem_id=problem_id,
        sample_id=sample_id,
        finish_reason=reason,
        topk_logprobs=topk,
        entropies=ent,
        label=label,
        answer=answer,
        extra=extra,
    )


def record_to_json(record: TrajectoryRecord) -> str:
    obj: dict[str, object] = {
        "problem_id": record.problem_id,
        "sample_id": record.sample_id,
    }
    if record.entropies is not None:
        obj["entropies"] = [float(v) for v in record.entropies.values]
    else:
        obj["topk_logprobs"] = [list(tok.values) for tok in record.topk_logprobs]
    obj["finish_reason"] = record.finish_reason.value
    if record.label is not None:
        obj["label"] = record.label
    if record.answer is not None:
        obj["answer"] = record.answer
    for key in sorted(record.extra):
        obj[key] = record.extra[key]
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def read_cache(path: str | os.PathLike) -> TrajectoryCache:
    """Parse a JSONL cache, failing fast with the offending line number.

    Blank lines are skipped but still counted for error reporting.
    """
    records: list[TrajectoryRecord] = []
    seen: set[tuple[str, int]] = set()
    spath = os.fspath(path)
    with open(spath, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise CacheParseError(f"invalid JSON: {exc.msg}", line=line_no, path=spath)
            rec = _record_from_json(obj, line_no, spath)
            key = (rec.problem_id, rec.sample_id)
            if key in seen:
                raise DuplicateRecordError(
                    f"duplicate record key {key}", line=line_no, path=spath
                )
            seen.add(key)
            records.append(rec)
    return TrajectoryCache.from_records(records)


def write_cache(cache: TrajectoryCache, path: str | os.PathLike) -> None:
    """Emit the canonical JSONL form, sorted by (problem_id, sample_id)."""
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        for record in cache.records():
            fh.write(record_to_json(record))
            fh.write("\n")
