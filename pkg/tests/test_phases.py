import numpy as np
import pytest

from entropick import HepConfig, Thresholds, compute_thresholds, detect_heps, detect_phases

from reference import naive_detect_heps, nearest_rank_quantile


class TestComputeThresholds:
    def test_constant_sequence(self):
        thr = compute_thresholds(np.full(40, 1.7))
        assert thr.theta_high == thr.theta_low == 1.7

    def test_one_to_hundred(self):
        thr = compute_thresholds(np.arange(1.0, 101.0))
        assert thr.theta_high == 99.0
        assert thr.theta_low == 80.0

    def test_single_element(self):
        thr = compute_thresholds(np.array([0.7]))
        assert thr.theta_high == thr.theta_low == 0.7

    def test_matches_reference_quantile(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            values = rng.uniform(0, 5, size=int(rng.integers(1, 300)))
            top = float(rng.uniform(0.01, 0.3))
            bottom = float(rng.uniform(0.2, 1.0 - top))
            cfg = HepConfig(top_percent=top, bottom_percent=bottom)
            thr = compute_thresholds(values, cfg)
            assert thr.theta_high == nearest_rank_quantile(values, 1.0 - top)
            assert thr.theta_low == nearest_rank_quantile(values, bottom)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            HepConfig(top_percent=0.0)
        with pytest.raises(ValueError):
            HepConfig(bottom_percent=1.0)
        with pytest.raises(ValueError):
            HepConfig(exit_k=0)
        with pytest.raises(ValueError):
            HepConfig(top_percent=0.5, bottom_percent=0.95)


class TestDetectHeps:
    def test_hand_trace(self):
        # entry at token 2; the exit window (tokens 4 and 5) completes at
        # token 5, so token 4 stays inside the phase
        heps = detect_heps([0.1, 0.9, 0.8, 0.1, 0.1, 0.2], Thresholds(0.85, 0.3), 2)
        assert [(h.start, h.end, h.mass, h.position) for h in heps] == [(2, 4, 3, 3.0)]

    def test_no_trigger(self):
        assert detect_heps([0.1, 0.2, 0.3], Thresholds(0.85, 0.3), 2) == []

    def test_open_at_end_closed_at_length(self):
        heps = detect_heps([0.1, 0.9, 0.9], Thresholds(0.85, 0.3), 2)
        assert [(h.start, h.end) for h in heps] == [(2, 3)]

    def test_constant_trace_single_full_phase(self):
        for k in (1, 2, 5):
            heps = detect_heps(np.full(9, 2.0), Thresholds(2.0, 2.0), k)
            assert [(h.start, h.end) for h in heps] == [(1, 9)]

    def test_exit_requires_full_window(self):
        # k=3 but only two trailing low tokens exist: phase stays open
        heps = detect_heps([0.9, 0.1, 0.1], Thresholds(0.85, 0.3), 3)
        assert [(h.start, h.end) for h in heps] == [(1, 3)]

    def test_single_token(self):
        assert [(h.start, h.end) for h in detect_heps([5.0], Thresholds(1.0, 0.5), 2)] == [(1, 1)]

    def test_exit_k_validation(self):
        with pytest.raises(ValueError):
            detect_heps([1.0], Thresholds(1.0, 0.5), 0)


def _random_case(rng):
    n = int(rng.integers(1, 501))
    values = rng.uniform(0.0, 3.0, size=n)
    k = int(rng.integers(1, 6))
    if rng.random() < 0.2:
        # exercise coincident thresholds and exact ties
        pick = float(values[rng.integers(n)])
        theta_high = theta_low = pick
    else:
        a, b = np.sort(rng.uniform(0.0, 3.0, size=2))
        theta_low, theta_high = float(a), float(b)
        if rng.random() < 0.3:
            # put thresholds on actual trace values so >= / <= ties occur
            theta_high = float(values[rng.integers(n)])
            low_pool = values[values <= theta_high]
            theta_low = float(low_pool[rng.integers(low_pool.size)])
    return values, theta_high, theta_low, k


class TestOracleEquivalence:
    def test_matches_naive_rescan(self):
        rng = np.random.default_rng(17)
        for _ in range(2000):
            values, th, tl, k = _random_case(rng)
            got = [(h.start, h.end) for h in detect_heps(values, Thresholds(th, tl), k)]
            assert got == naive_detect_heps(values.tolist(), th, tl, k)


class TestInvariants:
    def test_structure(self):
        rng = np.random.default_rng(23)
        for _ in range(400):
            values, th, tl, k = _random_case(rng)
            heps = detect_heps(values, Thresholds(th, tl), k)
            last_end = 0
            for h in heps:
                assert 1 <= h.start <= h.end <= values.size
                assert h.start > last_end
                assert values[h.start - 1] >= th  # first token meets the trigger
                assert h.mass == h.end - h.start + 1
                last_end = h.end
            assert sum(h.mass for h in heps) <= values.size

    def test_percentile_thresholds_always_yield_a_phase(self):
        rng = np.random.default_rng(29)
        for _ in range(200):
            values = rng.uniform(0, 4, size=int(rng.integers(1, 200)))
            heps, _ = detect_phases(values)
            assert heps

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            values = np.round(rng.uniform(0.0, 10.0, size=int(rng.integers(1, 200))), 6)
            cfg = HepConfig()
            heps, thr = detect_phases(values, cfg)
            # strictly increasing piecewise-linear map
            knots = np.sort(rng.uniform(0.0, 10.0, size=3))
            slopes = rng.uniform(0.5, 3.0, size=4)
            mapped = _piecewise(values, knots, slopes)
            heps2, thr2 = detect_phases(mapped, cfg)
            assert [(h.start, h.end) for h in heps] == [(h.start, h.end) for h in heps2]
            assert thr2.theta_high == _piecewise(np.array([thr.theta_high]), knots, slopes)[0]
            assert thr2.theta_low == _piecewise(np.array([thr.theta_low]), knots, slopes)[0]


def _piecewise(values, knots, slopes):
    """Strictly increasing piecewise-linear transform with given knots."""
    out = np.empty_like(values, dtype=np.float64)
    bounds = np.concatenate(([0.0], knots, [np.inf]))
    offset = 0.0
    for seg in range(len(slopes)):
        lo, hi = bounds[seg], bounds[seg + 1]
        mask = (values >= lo) & (values < hi)
        out[mask] = offset + slopes[seg] * (values[mask] - lo)
        if np.isfinite(hi):
            offset += slopes[seg] * (hi - lo)
    return out
