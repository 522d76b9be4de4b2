"""Timing oracle, frequency-search algorithms and the calibrated fixture."""

import numpy as np
import pytest

from pyramid_hls.errors import (
    AllStrategiesFail,
    InvalidParams,
    NoPassingPoint,
    NonPositivePeriod,
)
from pyramid_hls.fixtures import bundled_landscape_names, load_bundled_landscape
from pyramid_hls.timing import (
    LandscapeParams,
    StrategyProfile,
    WnsLandscape,
    binary_search_fmax,
    brute_force_search,
    exhaustive_scan,
    gen_landscape,
    load_landscape,
    minerva_search,
    probe_budget,
    reference_frequency,
    save_landscape,
    scan_table,
)


class TestReferenceFrequency:
    # direct evaluations of 1000 / (target_period - wns)
    @pytest.mark.parametrize("period,wns,expected", [
        (10.0, 0.0, 100.0),                  # exactly met clock
        (10.0, -2.0, 1000.0 / 12.0),         # negative slack
        (5.0, 1.0, 250.0),
        (2.0, 0.5, 1000.0 / 1.5),
        (3.0, -0.25, 1000.0 / 3.25),
        (1.0, 0.0, 1000.0),
    ])
    def test_hand_cases(self, period, wns, expected):
        assert reference_frequency(period, wns) == pytest.approx(expected, abs=1e-9)

    def test_zero_period_rejected(self):
        with pytest.raises(NonPositivePeriod):
            reference_frequency(0.0, 0.0)

    def test_negative_period_rejected(self):
        with pytest.raises(NonPositivePeriod):
            reference_frequency(-3.0, 0.0)

    def test_wns_at_least_period_rejected(self):
        with pytest.raises(NonPositivePeriod):
            reference_frequency(2.0, 2.0)
        with pytest.raises(NonPositivePeriod):
            reference_frequency(2.0, 5.0)


def flat_landscape(wns_values, lut=1000, lo=100.0, precision=1.0):
    wns = np.asarray(wns_values, dtype=float)
    return WnsLandscape(
        freq_lo=lo, freq_hi=lo + precision * (len(wns) - 1), precision=precision,
        strategies=(StrategyProfile(wns=wns, lut_count=lut),),
    )


class TestBundledFixture:
    def test_fixture_is_bundled(self):
        assert "icepole_like" in bundled_landscape_names()

    def test_bisection_returns_346(self):
        land = load_bundled_landscape("icepole_like")
        f = binary_search_fmax(land, 0, land.freq_lo, land.freq_hi)
        assert f == 346.0

    def test_scan_returns_389(self):
        land = load_bundled_landscape("icepole_like")
        assert exhaustive_scan(land, 0, center=333.0, radius=64.0) == 389.0

    def test_scan_strictly_beats_bisection_here(self):
        land = load_bundled_landscape("icepole_like")
        bisect = binary_search_fmax(land, 0, land.freq_lo, land.freq_hi)
        scan = exhaustive_scan(land, 0, center=bisect, radius=64.0)
        assert scan > bisect

    def test_scan_table_has_129_rows(self):
        land = load_bundled_landscape("icepole_like")
        rows = scan_table(land, 0, center=333.0, radius=64.0)
        assert len(rows) == 129
        freqs = [r[0] for r in rows]
        assert freqs[0] == 269.0 and freqs[-1] == 397.0
        for f, w, ok in rows:
            assert ok == (w >= 0.0)


class TestBinarySearch:
    def test_monotone_landscape_finds_true_maximum(self):
        # wns positive up to index 37, negative after
        wns = 37.0 - np.arange(100)
        land = flat_landscape(wns)
        assert binary_search_fmax(land, 0, land.freq_lo, land.freq_hi) == 137.0

    def test_low_bound_failing_raises(self):
        land = flat_landscape(-1.0 * np.ones(50))
        with pytest.raises(NoPassingPoint):
            binary_search_fmax(land, 0, land.freq_lo, land.freq_hi)

    def test_everything_passing_returns_high_bound(self):
        land = flat_landscape(np.ones(64))
        assert binary_search_fmax(land, 0, land.freq_lo, land.freq_hi) == 163.0

    def test_bad_bounds_rejected(self):
        land = flat_landscape(np.ones(10))
        with pytest.raises(InvalidParams):
            binary_search_fmax(land, 0, 105.0, 105.0)

    def test_probe_count_within_budget(self):
        from pyramid_hls.timing import _binary_search_detail

        for seed in range(10):
            land = gen_landscape(LandscapeParams(n_strategies=1), seed=seed)
            budget = probe_budget(land.freq_lo, land.freq_hi, land.precision)
            try:
                _, _, probes = _binary_search_detail(
                    land, 0, land.freq_lo, land.freq_hi, land.precision)
            except NoPassingPoint:
                continue
            assert probes <= budget


class TestScanVsBisection:
    def test_scan_never_below_bisection_on_20_random_landscapes(self):
        checked = 0
        for seed in range(25):
            land = gen_landscape(LandscapeParams(n_strategies=1), seed=seed)
            try:
                bisect = binary_search_fmax(land, 0, land.freq_lo, land.freq_hi)
            except NoPassingPoint:
                continue
            scan = exhaustive_scan(land, 0, center=bisect, radius=64.0)
            assert scan >= bisect
            checked += 1
        assert checked >= 20

    def test_zero_fluctuation_makes_them_agree(self):
        for seed in (0, 1, 2):
            land = gen_landscape(
                LandscapeParams(n_strategies=1, fluctuation_amplitude=0.0), seed=seed)
            bisect = binary_search_fmax(land, 0, land.freq_lo, land.freq_hi)
            assert exhaustive_scan(land, 0, center=bisect, radius=64.0) == bisect

    def test_zero_fluctuation_wns_is_monotone(self):
        land = gen_landscape(
            LandscapeParams(n_strategies=1, fluctuation_amplitude=0.0), seed=4)
        wns = land.strategies[0].wns
        assert (np.diff(wns) < 0).all()

    def test_scan_window_outside_range_rejected(self):
        land = flat_landscape(np.ones(10))
        with pytest.raises(InvalidParams):
            exhaustive_scan(land, 0, center=500.0, radius=5.0)


class TestMinerva:
    def test_matches_brute_force_50_trials_both_goals(self):
        for seed in range(50):
            land = gen_landscape(LandscapeParams(), seed=seed)
            assert len(land.strategies) <= 25
            assert land.grid_size <= 1024
            for goal in ("TP", "TPA"):
                got = minerva_search(land, goal)
                want = brute_force_search(land, goal)
                assert got.achieved_fmax == want.achieved_fmax, (seed, goal)
                assert got.strategy_id == want.strategy_id, (seed, goal)
                assert got.score == pytest.approx(want.score)
                assert got.probes < want.probes

    def test_tpa_prefers_smaller_strategy(self):
        # identical timing, different LUT cost: TPA must pick the cheaper one
        wns = 20.0 - np.arange(60)
        land = WnsLandscape(
            freq_lo=100.0, freq_hi=159.0, precision=1.0,
            strategies=(StrategyProfile(wns=wns, lut_count=8000),
                        StrategyProfile(wns=wns.copy(), lut_count=2000)),
        )
        assert minerva_search(land, "TP").strategy_id == 0     # tie -> low index
        assert minerva_search(land, "TPA").strategy_id == 1

    def test_invalid_goal(self):
        land = flat_landscape(np.ones(10))
        with pytest.raises(InvalidParams):
            minerva_search(land, "throughput")
        with pytest.raises(InvalidParams):
            brute_force_search(land, "tp")

    def test_all_strategies_failing(self):
        land = flat_landscape(-np.ones(30))
        with pytest.raises(AllStrategiesFail):
            minerva_search(land, "TP")
        with pytest.raises(AllStrategiesFail):
            brute_force_search(land, "TP")


class TestLandscapeStructure:
    def test_grid_arithmetic(self):
        land = flat_landscape(np.ones(11), lo=200.0, precision=0.5)
        assert land.grid_size == 11
        assert land.grid()[0] == 200.0
        assert land.grid()[-1] == 205.0
        assert land.snap(202.3) == 202.5

    def test_out_of_range_frequency_rejected(self):
        land = flat_landscape(np.ones(10))
        with pytest.raises(InvalidParams):
            land.wns_at(0, 99.0)

    def test_mismatched_strategy_length_rejected(self):
        with pytest.raises(InvalidParams):
            WnsLandscape(freq_lo=100.0, freq_hi=109.0, precision=1.0,
                         strategies=(StrategyProfile(wns=np.ones(5), lut_count=10),))

    def test_nonpositive_luts_rejected(self):
        with pytest.raises(InvalidParams):
            StrategyProfile(wns=np.ones(3), lut_count=0)

    @pytest.mark.parametrize("kwargs", [
        {"fluctuation_amplitude": -0.1},
        {"freq_lo": 500.0, "freq_hi": 100.0},
        {"precision": 0.0},
        {"n_strategies": 0},
    ])
    def test_params_validation(self, kwargs):
        with pytest.raises(InvalidParams):
            LandscapeParams(**kwargs)

    def test_gen_deterministic(self):
        a = gen_landscape(LandscapeParams(n_strategies=3), seed=9)
        b = gen_landscape(LandscapeParams(n_strategies=3), seed=9)
        for sa, sb in zip(a.strategies, b.strategies):
            assert np.array_equal(sa.wns, sb.wns)
            assert sa.lut_count == sb.lut_count


class TestLandscapePersistence:
    def test_round_trip_exact(self, tmp_path):
        land = gen_landscape(LandscapeParams(n_strategies=4), seed=3)
        save_landscape(land, tmp_path / "l.csv")
        back = load_landscape(tmp_path / "l.csv")
        assert back.freq_lo == land.freq_lo
        assert back.freq_hi == land.freq_hi
        assert back.precision == land.precision
        for sa, sb in zip(land.strategies, back.strategies):
            assert np.array_equal(sa.wns, sb.wns)
            assert sa.lut_count == sb.lut_count

    def test_save_twice_byte_identical(self, tmp_path):
        land = gen_landscape(LandscapeParams(n_strategies=2), seed=1)
        save_landscape(land, tmp_path / "a.csv")
        save_landscape(land, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_search_results_identical_after_reload(self, tmp_path):
        land = gen_landscape(LandscapeParams(), seed=7)
        save_landscape(land, tmp_path / "l.csv")
        back = load_landscape(tmp_path / "l.csv")
        for goal in ("TP", "TPA"):
            a = minerva_search(land, goal)
            b = minerva_search(back, goal)
            assert (a.achieved_fmax, a.strategy_id, a.score) == \
                (b.achieved_fmax, b.strategy_id, b.score)
