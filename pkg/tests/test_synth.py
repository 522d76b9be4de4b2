"""Synthetic benchmark generator: protocol counts, determinism, and the
hidden-function identity checked through the report round trip."""

import numpy as np
import pytest

from pyramid_hls.dataset import save_dataset, split
from pyramid_hls.errors import InvalidParams
from pyramid_hls.learners import LearnerSpec, train
from pyramid_hls.manifest import default_manifest, flatten
from pyramid_hls.report import parse_report
from pyramid_hls.synth import (
    CATEGORIES,
    DeviceProfile,
    OracleSpec,
    gen_dataset,
    hidden_targets,
)


@pytest.fixture(scope="module")
def small_clean():
    # 4 designs x 5 clocks x 3 devices x 2 goals = 120 samples, no noise
    return gen_dataset(OracleSpec(noise_level=0.0), 4, seed=77)


class TestProtocolShape:
    def test_benchmark_sample_count(self):
        ds = gen_dataset(OracleSpec(), 9, seed=1)
        assert len(ds) == 270          # 9 x 5 x 3 x 2
        assert len(ds.filter_goal("TP")) == 135
        assert len(ds.filter_goal("TPA")) == 135

    def test_grid_coverage(self, small_clean):
        periods = {s.requested_period for s in small_clean.samples}
        devices = {s.device_id for s in small_clean.samples}
        assert periods == {1.0, 2.0, 4.0, 5.0, 10.0}
        assert devices == {"xa7-low", "xk7-mid", "xv7-high"}

    def test_categories_rotate(self):
        ds = gen_dataset(OracleSpec(noise_level=0.0), 8, seed=3)
        by_design = {}
        for s in ds.samples:
            by_design.setdefault(s.design_id, s.category)
        assert sorted(by_design) == [f"design_{i:03d}" for i in range(8)]
        assert [by_design[f"design_{i:03d}"] for i in range(8)] == list(CATEGORIES) * 2

    def test_n_designs_validated(self):
        with pytest.raises(InvalidParams):
            gen_dataset(OracleSpec(), 0, seed=0)

    def test_spec_validation(self):
        with pytest.raises(InvalidParams):
            OracleSpec(noise_level=-0.01)
        bad_devices = (
            DeviceProfile("big", {"LUT": 1000, "FF": 1000, "DSP": 10, "BRAM": 10}, 1.0),
            DeviceProfile("small", {"LUT": 100, "FF": 100, "DSP": 1, "BRAM": 1}, 1.0),
        )
        with pytest.raises(InvalidParams):
            OracleSpec(devices=bad_devices)


class TestDeterminism:
    def test_same_seed_identical(self):
        a = gen_dataset(OracleSpec(), 3, seed=42)
        b = gen_dataset(OracleSpec(), 3, seed=42)
        for sa, sb in zip(a.samples, b.samples):
            assert np.array_equal(sa.features, sb.features)
            assert sa.targets == sb.targets

    def test_different_seed_differs(self):
        a = gen_dataset(OracleSpec(), 3, seed=42)
        b = gen_dataset(OracleSpec(), 3, seed=43)
        assert any(not np.array_equal(sa.features, sb.features)
                   for sa, sb in zip(a.samples, b.samples))

    def test_saved_csv_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            ds = gen_dataset(OracleSpec(), 2, seed=5)
            save_dataset(ds, tmp_path / f"{name}.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.csv.meta.csv").read_bytes() == \
            (tmp_path / "b.csv.meta.csv").read_bytes()


class TestHiddenFunctionIdentity:
    def test_noise_free_targets_recomputable_from_report_files(self, tmp_path):
        # dual route: written report -> parse -> hidden function, versus the
        # targets stored in the generated dataset
        spec = OracleSpec(noise_level=0.0)
        ds = gen_dataset(spec, 2, seed=11, out_dir=tmp_path)
        manifest = default_manifest()
        devices = {d.device_id: d for d in spec.devices}

        by_key = {}
        for s in ds.samples:
            by_key[(s.design_id, s.requested_period, s.device_id, s.goal)] = s

        reports = sorted((tmp_path / "reports").glob("*.rpt"))
        assert len(reports) == 2 * 5 * 3
        for path in reports:
            report = parse_report(path.read_text(encoding="utf-8"))
            design_id = path.name.split("_p")[0]
            category = by_key[(design_id, report.target_clock_period,
                               report.device_id, "TP")].category
            for goal in ("TP", "TPA"):
                sample = by_key[(design_id, report.target_clock_period,
                                 report.device_id, goal)]
                expected = hidden_targets(report, category, goal,
                                          devices[report.device_id], spec, None)
                assert sample.targets == expected
                assert np.array_equal(sample.features,
                                      flatten(report, manifest).values)

    def test_tpa_applies_area_and_fmax_factors(self, small_clean):
        by_key = {}
        for s in small_clean.samples:
            by_key[(s.design_id, s.requested_period, s.device_id, s.goal)] = s
        for (did, period, dev, goal), s in by_key.items():
            if goal != "TP":
                continue
            tpa = by_key[(did, period, dev, "TPA")]
            for t in ("lut", "ff", "dsp", "bram"):
                assert tpa.targets[t] == pytest.approx(0.88 * s.targets[t], rel=1e-12)
            assert tpa.targets["fmax"] == pytest.approx(0.94 * s.targets["fmax"], rel=1e-12)

    def test_noise_scales_dispersion(self):
        clean = gen_dataset(OracleSpec(noise_level=0.0), 3, seed=9)
        noisy = gen_dataset(OracleSpec(noise_level=0.05), 3, seed=9)
        rel = [abs(n.targets["lut"] / c.targets["lut"] - 1.0)
               for c, n in zip(clean.samples, noisy.samples)]
        assert 0.01 < np.mean(rel) < 0.15


class TestStructure:
    def test_category_regimes_non_degenerate(self, small_clean):
        # cryptography carries a much larger area bias than mathematical
        lut_by_cat = {}
        for s in small_clean.samples:
            lut_by_cat.setdefault(s.category, []).append(
                s.targets["lut"] / (1.0 + s.features[0]))
        means = {c: np.mean(v) for c, v in lut_by_cat.items()}
        assert len(means) == 4

    def test_targets_positive(self, small_clean):
        for s in small_clean.samples:
            assert all(v > 0 for v in s.targets.values())

    def test_fmax_falls_with_requested_period_increase_in_estimate(self, small_clean):
        # within one design/device, longer period -> lower achieved fmax
        by_group = {}
        for s in small_clean.samples:
            if s.goal == "TP":
                by_group.setdefault((s.design_id, s.device_id), []).append(
                    (s.requested_period, s.targets["fmax"]))
        for rows in by_group.values():
            rows.sort()
            fm = [f for _, f in rows]
            assert fm[0] > fm[-1]

    def test_learnable_above_noise_floor(self):
        # a small forest must land within a few multiples of the 5% noise
        ds = gen_dataset(OracleSpec(), 20, seed=2).filter_goal("TP")
        train_ds, test_ds = split(ds, 0.2, seed=0)
        model = train(LearnerSpec("rf", {"n_trees": 10, "max_depth": 8}),
                      train_ds.feature_matrix(), train_ds.target_vector("lut"), seed=0)
        pred = model.predict(test_ds.feature_matrix())
        actual = test_ds.target_vector("lut")
        rmse = float(np.sqrt(np.mean(((pred - actual) / actual) ** 2)) * 100)
        assert rmse < 25.0
