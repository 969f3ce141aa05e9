"""Seeded synthetic entropy traces with planted uncertainty bursts.

The generator plants high-entropy bursts at controlled positions along
each trace, which gives an analytic ground truth for verifying phase
detection, centroid scoring, and selection end to end. Burst midpoints
follow fixed Beta laws: Beta(2, 5) for front-loaded traces, Beta(5, 2)
for back-loaded, Beta(1, 1) for uniform. It validates mechanism, not
realism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SynthSpecError
from .traces import EntropyTrace, FinishReason, TrajectoryCache, TrajectoryRecord

PATTERNS = ("front_loaded", "back_loaded", "uniform")
LABEL_RULES = ("front_is_correct", "independent")

BETA_SHAPES = {
    "front_loaded": (2.0, 5.0),
    "back_loaded": (5.0, 2.0),
    "uniform": (1.0, 1.0),
}

# Minimum clear tokens between planted features, so separate bursts do not
# fuse into one detected phase at small exit windows.
MIN_GAP = 8
_PLACEMENT_ATTEMPTS = 200
_DECIMALS = 6


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for one synthetic corpus.

    ``label_rule="front_is_correct"`` draws each trajectory's pattern
    independently (front-loaded with probability ``front_fraction``, else
    back-loaded) and labels front-loaded ones correct; ``pattern`` is
    ignored in that mode. ``label_rule="independent"`` uses ``pattern``
    for every trajectory and labels each one correct with probability
    ``label_p`` regardless of content.

    ``spike_rate`` > 0 additionally plants isolated single-token entropy
    spikes of level ``spike_entropy`` outside the bursts.
    """

    seed: int
    pattern: str = "front_loaded"
    length_range: tuple[int, int] = (400, 800)
    burst_count_range: tuple[int, int] = (2, 3)
    burst_length_range: tuple[int, int] = (6, 10)
    base_entropy: float = 0.5
    burst_entropy: float = 3.0
    noise_std: float = 0.2
    label_rule: str = "front_is_correct"
    label_p: float = 0.5
    front_fraction: float = 0.5
    spike_rate: float = 0.0
    spike_entropy: float | None = None

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise SynthSpecError(f"pattern must be one of {PATTERNS}")
        if self.label_rule not in LABEL_RULES:
            raise SynthSpecError(f"label_rule must be one of {LABEL_RULES}")
        lo, hi = self.length_range
        if lo < 10 or hi < lo:
            raise SynthSpecError("length_range must satisfy 10 <= min <= max")
        clo, chi = self.burst_count_range
        if clo < 1 or chi < clo:
            raise SynthSpecError("burst_count_range must satisfy 1 <= min <= max")
        blo, bhi = self.burst_length_range
        if blo < 1 or bhi < blo:
            raise SynthSpecError("burst_length_range must satisfy 1 <= min <= max")
        if self.noise_std < 0:
            raise SynthSpecError("noise_std must be >= 0")
        if self.burst_entropy <= self.base_entropy + 4.0 * self.noise_std:
            raise SynthSpecError(
                "bursts are not separable: need burst_entropy > base_entropy + 4 * noise_std"
            )
        if chi * bhi + (chi - 1) * MIN_GAP > lo:
            raise SynthSpecError(
                f"bursts exceed length: {chi} bursts of up to {bhi} tokens "
                f"cannot fit in a trace of {lo} tokens"
            )
        if not (0.0 <= self.label_p <= 1.0):
            raise SynthSpecError("label_p must be in [0, 1]")
        if not (0.0 < self.front_fraction < 1.0):
            raise SynthSpecError("front_fraction must be in (0, 1)")
        if self.spike_rate < 0 or self.spike_rate >= 1:
            raise SynthSpecError("spike_rate must be in [0, 1)")
        if self.spike_rate > 0:
            if self.spike_entropy is None:
                raise SynthSpecError("spike_entropy required when spike_rate > 0")
            if self.spike_entropy <= self.base_entropy + 4.0 * self.noise_std:
                raise SynthSpecError("spikes are not separable from base noise")

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise SynthSpecError(f"unknown spec keys: {sorted(unknown)}")
        converted = dict(obj)
        for key in ("length_range", "burst_count_range", "burst_length_range"):
            if key in converted:
                converted[key] = tuple(converted[key])
        return cls(**converted)


@dataclass(frozen=True)
class PlantedTrace:
    """One generated trace plus its ground truth."""

    entropies: np.ndarray
    bursts: tuple[tuple[int, int], ...]  # 1-based inclusive spans
    spikes: tuple[int, ...]  # 1-based positions
    front: bool
    label: bool


def _place_bursts(rng: np.random.Generator, length: int, lengths: np.ndarray, shape) -> list[tuple[int, int]]:
    a, b = shape
    for _ in range(_PLACEMENT_ATTEMPTS):
        mids = 1.0 + (length - 1.0) * rng.beta(a, b, size=lengths.size)
        spans = []
        for mid, blen in zip(mids, lengths):
            start = int(round(mid - (blen - 1) / 2.0))
            start = min(max(start, 1), length - int(blen) + 1)
            spans.append((start, start + int(blen) - 1))
        spans.sort()
        ok = all(
            spans[i + 1][0] - spans[i][1] - 1 >= MIN_GAP for i in range(len(spans) - 1)
        )
        if ok:
            return spans
    raise SynthSpecError(
        f"could not place {lengths.size} separated bursts in {length} tokens"
    )


def draw_trace(spec: SynthSpec, rng: np.random.Generator) -> PlantedTrace:
    """Generate one trace; draw order is fixed so results are reproducible."""
    if spec.label_rule == "front_is_correct":
        front = bool(rng.random() < spec.front_fraction)
        pattern = "front_loaded" if front else "back_loaded"
        label = front
    else:
        pattern = spec.pattern
        front = pattern == "front_loaded"
        label = bool(rng.random() < spec.label_p)

    length = int(rng.integers(spec.length_range[0], spec.length_range[1] + 1))
    n_bursts = int(rng.integers(spec.burst_count_range[0], spec.burst_count_range[1] + 1))
    lengths = rng.integers(
        spec.burst_length_range[0], spec.burst_length_range[1] + 1, size=n_bursts
    )
    spans = _place_bursts(rng, length, lengths, BETA_SHAPES[pattern])

    values = rng.normal(spec.base_entropy, spec.noise_std, size=length)
    burst_mask = np.zeros(length, dtype=bool)
    for start, end in spans:
        values[start - 1 : end] = rng.normal(spec.burst_entropy, spec.noise_std, size=end - start + 1)
        burst_mask[max(0, start - 1 - MIN_GAP // 2) : min(length, end + MIN_GAP // 2)] = True

    spikes: list[int] = []
    if spec.spike_rate > 0:
        eligible = np.flatnonzero(~burst_mask)
        hits = eligible[rng.random(eligible.size) < spec.spike_rate]
        # Thin runs of adjacent hits so each spike stays single-token.
        prev = -10
        for pos in hits:
            if pos - prev > 2:
                values[pos] = rng.normal(spec.spike_entropy, spec.noise_std)
                spikes.append(int(pos) + 1)
                prev = pos

    values = np.clip(values, 0.0, None)
    values = np.round(values, _DECIMALS)
    return PlantedTrace(
        entropies=values,
        bursts=tuple(spans),
        spikes=tuple(spikes),
        front=front,
        label=label,
    )


def trace_rng(seed: int, problem_index: int, sample_index: int) -> np.random.Generator:
    """Independent per-trajectory stream; safe to generate in any order."""
    return np.random.default_rng(np.random.SeedSequence([seed, problem_index, sample_index]))


def generate_corpus(
    spec: SynthSpec, problems: int, samples_per_problem: int
) -> TrajectoryCache:
    """Full cache of planted traces, canonical ordering, entropies payload."""
    if problems < 1 or samples_per_problem < 1:
        raise SynthSpecError("problems and samples_per_problem must be >= 1")
    records = []
    for p in range(problems):
        pid = f"synth-{p:04d}"
        for s in range(samples_per_problem):
            planted = draw_trace(spec, trace_rng(spec.seed, p, s))
            records.append(
                TrajectoryRecord(
                    problem_id=pid,
                    sample_id=s,
                    finish_reason=FinishReason.STOP,
                    entropies=EntropyTrace(planted.entropies),
                    label=planted.label,
                )
            )
    return TrajectoryCache.from_records(records)


def generate_planted(
    spec: SynthSpec, problems: int, samples_per_problem: int
) -> dict[tuple[str, int], PlantedTrace]:
    """Ground-truth view of the same corpus ``generate_corpus`` emits."""
    out = {}
    for p in range(problems):
        pid = f"synth-{p:04d}"
        for s in range(samples_per_problem):
            out[(pid, s)] = draw_trace(spec, trace_rng(spec.seed, p, s))
    return out
