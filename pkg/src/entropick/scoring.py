"""Entropy-centroid scores for trajectories.

The centroid is the mass-weighted mean position of all high-entropy
phases, normalized by trace length; every token inside a phase counts
with unit mass, tokens outside count zero. ``raw_entropy_centroid`` is
the ablation variant that weights every token by its raw entropy value
instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NoCentroidError
from .phases import Hep, HepConfig, Thresholds, detect_heps, _trace_values


@dataclass(frozen=True)
class CentroidScore:
    """Centroid value plus the phase evidence that produced it."""

    value: float
    heps: tuple[Hep, ...]
    thresholds: Thresholds
    length: int


def compute_centroid(heps: Sequence[Hep], length: int) -> float:
    """Normalized phase centroid: sum(mass * position) / (L * sum(mass))."""
    if not heps:
        raise NoCentroidError("no phases to take a centroid of")
    if length < 1:
        raise ValueError("length must be >= 1")
    mass_total = 0
    moment = 0.0
    for hep in heps:
        if hep.end > length:
            raise ValueError(f"phase {hep} extends past trace length {length}")
        mass_total += hep.mass
        moment += hep.mass * hep.position
    return moment / (length * mass_total)


def score_trace(
    trace,
    cfg: HepConfig = HepConfig(),
    thresholds: Thresholds | None = None,
) -> CentroidScore:
    """Thresholds, phase detection, and centroid for one trace.

    Pass explicit ``thresholds`` to bypass the percentile rule (absolute
    thresholds are an experimental mode; with percentile thresholds the
    phase list is never empty).
    """
    values = _trace_values(trace)
    if thresholds is None:
        from .phases import compute_thresholds

        thresholds = compute_thresholds(values, cfg)
    heps = detect_heps(values, thresholds, cfg.exit_k)
    value = compute_centroid(heps, values.size)
    return CentroidScore(
        value=value, heps=tuple(heps), thresholds=thresholds, length=int(values.size)
    )


def raw_entropy_centroid(trace) -> float:
    """Centroid weighted by raw entropy values (1-based positions)."""
    values = _trace_values(trace)
    total = float(values.sum())
    if total <= 0.0:
        raise NoCentroidError("trace has no entropy mass")
    positions = np.arange(1, values.size + 1, dtype=np.float64)
    return float((values * positions).sum() / (values.size * total))
