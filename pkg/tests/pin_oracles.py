"""Monte Carlo oracle runs used to pin the constants frozen in the tests.

Run manually (`python3 tests/pin_oracles.py`); not collected by pytest.
Each section prints the statistic a test asserts against, measured over
several seeds so the frozen bounds include sampling spread.
"""

import sys
import time

import numpy as np

from entropick import (
    SelectionConfig,
    SelectionMethod,
    SynthSpec,
    detect_phases,
    draw_trace,
    generate_corpus,
    method_accuracy,
    pass_at_1,
    score_trace,
    separation_stats,
    sweep_grid,
)
from entropick.synth import trace_rng


def mean_centroid(pattern: str, seed: int, traces: int = 1000) -> float:
    spec = SynthSpec(seed=seed, pattern=pattern, label_rule="independent")
    values = []
    for i in range(traces):
        planted = draw_trace(spec, trace_rng(seed, 0, i))
        values.append(score_trace(planted.entropies).value)
    return float(np.mean(values))


def section_mean_centroids():
    print("== mean centroid, 1000 traces, single-pattern corpora ==")
    for pattern in ("front_loaded", "back_loaded"):
        means = [mean_centroid(pattern, seed) for seed in range(5)]
        print(f"{pattern}: means={np.round(means, 4)} mean={np.mean(means):.4f} "
              f"std={np.std(means):.4f}")


def section_separation(problems=200, samples=64):
    print(f"== front_is_correct corpus {problems}x{samples}: centroid medians ==")
    gaps = []
    for seed in range(5):
        cache = generate_corpus(SynthSpec(seed=seed), problems, samples)
        stats = separation_stats(cache)
        gap = stats.median_centroid_incorrect - stats.median_centroid_correct
        gaps.append(gap)
        print(f"seed={seed} median_correct={stats.median_centroid_correct:.4f} "
              f"median_incorrect={stats.median_centroid_incorrect:.4f} gap={gap:.4f}")
    print(f"gap mean={np.mean(gaps):.4f} std={np.std(gaps):.4f} "
          f"95% interval ~ [{np.mean(gaps)-2.6*np.std(gaps):.4f}, "
          f"{np.mean(gaps)+2.6*np.std(gaps):.4f}]")


def section_selection_lift(problems=200, samples=64):
    print(f"== selection accuracy, front_is_correct {problems}x{samples} ==")
    rows = []
    for seed in range(5):
        cache = generate_corpus(SynthSpec(seed=seed), problems, samples)
        p1 = pass_at_1(cache)
        low = method_accuracy(cache, SelectionConfig(method=SelectionMethod.LOWEST_CENTROID))
        rnd = method_accuracy(cache, SelectionConfig(method=SelectionMethod.RANDOM, rng_seed=seed))
        rows.append((p1, low, rnd, low - rnd))
        print(f"seed={seed} pass@1={p1:.4f} lowest={low:.4f} random={rnd:.4f} lift={low-rnd:.4f}")
    arr = np.asarray(rows)
    print(f"lift mean={arr[:,3].mean():.4f} std={arr[:,3].std():.4f}")


def recovery_spec(seed: int) -> SynthSpec:
    return SynthSpec(
        seed=seed, pattern="uniform", label_rule="independent",
        length_range=(500, 600), burst_count_range=(1, 1), burst_length_range=(5, 7),
    )


def section_recovery():
    print("== planted burst recovery at default HepConfig ==")
    for seed in range(5):
        spec = recovery_spec(seed)
        found = 0
        total = 0
        start_hits = 0
        for i in range(2000):
            planted = draw_trace(spec, trace_rng(seed, 1, i))
            heps, _ = detect_phases(planted.entropies)
            for (bs, be) in planted.bursts:
                total += 1
                mid = (bs + be) / 2.0
                if any(abs(h.position - mid) <= 2.0 for h in heps):
                    found += 1
                if any(abs(h.start - bs) <= 2 for h in heps):
                    start_hits += 1
        print(f"seed={seed} midpoint±2 recovery={found/total:.4f} start±2={start_hits/total:.4f}")


def section_sweep(problems=120, samples=32):
    print(f"== sweep accuracy range, front_is_correct {problems}x{samples} ==")
    tops = [0.005, 0.01, 0.02, 0.05]
    bottoms = [0.7, 0.8, 0.9]
    ks = [1, 2, 3, 4]
    for seed in range(3):
        cache = generate_corpus(SynthSpec(seed=seed), problems, samples)
        t0 = time.time()
        points = sweep_grid(cache, SelectionConfig(), tops, bottoms, ks)
        accs = [p.accuracy for p in points]
        print(f"seed={seed} min={min(accs):.4f} max={max(accs):.4f} "
              f"range={max(accs)-min(accs):.4f} ({time.time()-t0:.1f}s)")


def section_spikes(problems=150, samples=48):
    print(f"== spike corpus: lowest_centroid vs raw_entropy_centroid ==")
    for seed in range(5):
        spec = SynthSpec(seed=seed, spike_rate=0.003, spike_entropy=25.0)
        cache = generate_corpus(spec, problems, samples)
        hep_acc = method_accuracy(cache, SelectionConfig(method=SelectionMethod.LOWEST_CENTROID))
        raw_acc = method_accuracy(cache, SelectionConfig(method=SelectionMethod.RAW_CENTROID))
        print(f"seed={seed} hep={hep_acc:.4f} raw={raw_acc:.4f} delta={hep_acc-raw_acc:+.4f}")


if __name__ == "__main__":
    wanted = sys.argv[1:] or ["means", "separation", "lift", "recovery", "sweep", "spikes"]
    t0 = time.time()
    if "means" in wanted:
        section_mean_centroids()
    if "separation" in wanted:
        section_separation()
    if "lift" in wanted:
        section_selection_lift()
    if "recovery" in wanted:
        section_recovery()
    if "sweep" in wanted:
        section_sweep()
    if "spikes" in wanted:
        section_spikes()
    print(f"total {time.time()-t0:.1f}s")
