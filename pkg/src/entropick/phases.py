"""High-entropy-phase segmentation of token-entropy traces.

A phase opens at a token whose entropy reaches the upper threshold and
closes once ``exit_k`` consecutive tokens sit at or below the lower
threshold. Thresholds are per-trajectory nearest-rank percentiles, so
segmentation is invariant under any strictly increasing transform of the
trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MalformedTraceError
from .traces import EntropyTrace


@dataclass(frozen=True)
class HepConfig:
    """Percentile parameters for phase detection.

    ``top_percent`` is the fraction of tokens treated as high entropy
    (entry threshold = (1 - top_percent) quantile); ``bottom_percent`` is
    the quantile used for the exit threshold. ``exit_k`` consecutive
    low tokens end a phase.
    """

    top_percent: float = 0.01
    bottom_percent: float = 0.80
    exit_k: int = 2

    def __post_init__(self):
        if not (0.0 < self.top_percent < 1.0):
            raise ValueError("top_percent must be in (0, 1)")
        if not (0.0 < self.bottom_percent < 1.0):
            raise ValueError("bottom_percent must be in (0, 1)")
        if self.bottom_percent > 1.0 - self.top_percent:
            # Keeps the derived low threshold at or below the high one.
            raise ValueError("bottom_percent must not exceed 1 - top_percent")
        if self.exit_k < 1:
            raise ValueError("exit_k must be >= 1")


@dataclass(frozen=True)
class Thresholds:
    theta_high: float
    theta_low: float

    def __post_init__(self):
        if self.theta_low > self.theta_high:
            raise ValueError("theta_low must be <= theta_high")


@dataclass(frozen=True, order=True)
class Hep:
    """One high-entropy phase: an inclusive 1-based token span."""

    start: int
    end: int

    def __post_init__(self):
        if not (1 <= self.start <= self.end):
            raise ValueError("phase must satisfy 1 <= start <= end")

    @property
    def mass(self) -> int:
        """Token count of the span."""
        return self.end - self.start + 1

    @property
    def position(self) -> float:
        """Midpoint token index (may be half-integral)."""
        return (self.start + self.end) / 2.0


def _trace_values(trace) -> np.ndarray:
    values = trace.values if isinstance(trace, EntropyTrace) else np.asarray(trace, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise MalformedTraceError("trace must be a nonempty 1-d sequence")
    return values


def nearest_rank(sorted_values: np.ndarray, fraction: float) -> float:
    """Nearest-rank order statistic: value at rank ceil(fraction * n),
    clamped to [1, n], over an ascending-sorted array."""
    n = sorted_values.size
    rank = math.ceil(fraction * n)
    rank = min(max(rank, 1), n)
    return float(sorted_values[rank - 1])


def compute_thresholds(trace, cfg: HepConfig = HepConfig()) -> Thresholds:
    """Per-trajectory entry/exit thresholds from nearest-rank percentiles."""
    values = _trace_values(trace)
    ordered = np.sort(values)
    theta_high = nearest_rank(ordered, 1.0 - cfg.top_percent)
    theta_low = nearest_rank(ordered, cfg.bottom_percent)
    return Thresholds(theta_high=theta_high, theta_low=theta_low)


def detect_heps(trace, thresholds: Thresholds, exit_k: int = 2) -> list[Hep]:
    """Segment a trace into high-entropy phases.

    State update per token, earliest first: a token at or above
    ``theta_high`` puts (or keeps) the machine in a phase; otherwise, a
    phase ends once the trailing ``exit_k`` tokens are all at or below
    ``theta_low``. When one token satisfies both (possible only with
    coincident thresholds), the entry condition wins, so the phase
    persists. A phase still open at the end of the trace closes at the
    last token.

    Implemented as a vectorized last-event scan: the state at token i is
    "in phase" exactly when the most recent entry event is at least as
    recent as the most recent completed exit window.
    """
    if exit_k < 1:
        raise ValueError("exit_k must be >= 1")
    values = _trace_values(trace)
    n = values.size
    idx = np.arange(n)

    entries = values >= thresholds.theta_high
    lows = values <= thresholds.theta_low
    # Length of the low-token run ending at each index.
    last_not_low = np.maximum.accumulate(np.where(~lows, idx, -1))
    streak = idx - last_not_low
    exits = streak >= exit_k

    last_entry = np.maximum.accumulate(np.where(entries, idx, -1))
    last_exit = np.maximum.accumulate(np.where(exits, idx, -1))
    in_phase = (last_entry >= 0) & (last_entry >= last_exit)

    if not in_phase.any():
        return []
    padded = np.concatenate(([False], in_phase, [False]))
    flips = np.flatnonzero(np.diff(padded.astype(np.int8)))
    starts = flips[0::2] + 1  # to 1-based
    ends = flips[1::2]  # exclusive 0-based == inclusive 1-based
    return [Hep(int(a), int(b)) for a, b in zip(starts, ends)]


def detect_phases(trace, cfg: HepConfig = HepConfig()) -> tuple[list[Hep], Thresholds]:
    """Convenience wrapper: thresholds then detection in one call."""
    thresholds = compute_thresholds(trace, cfg)
    return detect_heps(trace, thresholds, cfg.exit_k), thresholds
