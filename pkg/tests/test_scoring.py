from fractions import Fraction

import numpy as np
import pytest

from entropick import (
    Hep,
    HepConfig,
    NoCentroidError,
    Thresholds,
    compute_centroid,
    detect_heps,
    raw_entropy_centroid,
    score_trace,
)

from reference import rational_centroid


class TestComputeCentroid:
    @pytest.mark.parametrize(
        "spans,length,expected",
        [
            ([(1, 9)], 9, Fraction(5, 9)),
            ([(2, 4), (8, 10)], 10, Fraction(3, 5)),
            ([(2, 4)], 6, Fraction(1, 2)),
        ],
    )
    def test_exact_values(self, spans, length, expected):
        assert rational_centroid(spans, length) == expected
        value = compute_centroid([Hep(a, b) for a, b in spans], length)
        assert value == pytest.approx(float(expected), abs=1e-12)

    def test_empty_is_error(self):
        with pytest.raises(NoCentroidError):
            compute_centroid([], 10)

    def test_phase_past_length_rejected(self):
        with pytest.raises(ValueError):
            compute_centroid([Hep(4, 12)], 10)

    def test_weighted_mean_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            length = int(rng.integers(2, 400))
            heps = _random_heps(rng, length)
            c = compute_centroid(heps, length)
            positions = [h.position for h in heps]
            assert min(positions) / length <= c <= max(positions) / length
            assert 1.0 / length <= c <= 1.0

    def test_right_shift_strictly_increases(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            length = int(rng.integers(3, 300))
            heps = _random_heps(rng, length - 1)  # leave room to shift right
            shifted = [Hep(h.start + 1, h.end + 1) for h in heps]
            assert compute_centroid(shifted, length) > compute_centroid(heps, length)

    def test_matches_rational_reference(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            length = int(rng.integers(2, 500))
            heps = _random_heps(rng, length)
            expected = rational_centroid([(h.start, h.end) for h in heps], length)
            assert compute_centroid(heps, length) == pytest.approx(float(expected), abs=1e-12)


def _random_heps(rng, length):
    heps = []
    cursor = 1
    while cursor <= length:
        start = cursor + int(rng.integers(0, 5))
        if start > length:
            break
        end = min(length, start + int(rng.integers(0, 6)))
        heps.append(Hep(start, end))
        cursor = end + 2
        if rng.random() < 0.4:
            break
    if not heps:
        heps = [Hep(1, 1)]
    return heps


class TestRawEntropyCentroid:
    def test_uniform_mass(self):
        assert raw_entropy_centroid(np.full(9, 0.8)) == pytest.approx(5.0 / 9.0, abs=1e-12)

    def test_all_mass_last_token(self):
        assert raw_entropy_centroid([0.0, 0.0, 1.0]) == 1.0

    def test_direct_summation(self):
        assert raw_entropy_centroid([1.0, 2.0, 3.0]) == pytest.approx(14.0 / 18.0, abs=1e-12)

    def test_zero_mass_is_error(self):
        with pytest.raises(NoCentroidError):
            raw_entropy_centroid([0.0, 0.0, 0.0])


class TestScoreTrace:
    def test_fields_consistent(self):
        rng = np.random.default_rng(12)
        values = rng.uniform(0, 3, size=120)
        score = score_trace(values)
        assert score.length == 120
        assert score.heps
        assert score.value == pytest.approx(
            compute_centroid(list(score.heps), score.length), abs=0
        )
        assert score.thresholds.theta_low <= score.thresholds.theta_high

    def test_absolute_thresholds_can_yield_no_phase(self):
        with pytest.raises(NoCentroidError):
            score_trace([0.1, 0.2], HepConfig(), thresholds=Thresholds(5.0, 0.5))

    def test_binary_mass_property(self):
        # perturbing values inside phases without crossing either threshold
        # leaves the centroid bit-identical
        rng = np.random.default_rng(13)
        thresholds = Thresholds(theta_high=2.0, theta_low=1.0)
        for _ in range(100):
            values = rng.uniform(0.0, 3.0, size=int(rng.integers(5, 200)))
            heps = detect_heps(values, thresholds, 2)
            if not heps:
                continue
            before = compute_centroid(heps, values.size)
            perturbed = values.copy()
            for h in heps:
                for i in range(h.start - 1, h.end):
                    v = perturbed[i]
                    if v > thresholds.theta_high:
                        perturbed[i] = float(rng.uniform(thresholds.theta_high + 1e-9, 4.0))
                    elif thresholds.theta_low < v < thresholds.theta_high:
                        perturbed[i] = float(
                            rng.uniform(thresholds.theta_low + 1e-9, thresholds.theta_high - 1e-9)
                        )
                    elif v < thresholds.theta_low:
                        perturbed[i] = float(rng.uniform(0.0, thresholds.theta_low - 1e-9))
            heps2 = detect_heps(perturbed, thresholds, 2)
            assert [(h.start, h.end) for h in heps] == [(h.start, h.end) for h in heps2]
            assert compute_centroid(heps2, values.size) == before
