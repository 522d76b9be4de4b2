"""Pyramid iteration mechanics and classic-stack fold hygiene."""

import numpy as np
import pytest

from pyramid_hls.dataset import Dataset, Sample, rng_from_seed
from pyramid_hls.ensemble import (
    STOP_ACCURACY_MET,
    STOP_MAX_ITERATIONS,
    STOP_USER,
    PyramidConfig,
    PyramidModel,
    StackedModel,
    load_pyramid,
    save_pyramid,
    train_classic_stack,
    train_pyramid,
)
from pyramid_hls.errors import DimensionMismatch
from pyramid_hls.learners import LearnerSpec, train as train_learner


def make_dataset(n, p=3, target_fn=None, seed=0, index_feature=False):
    rng = rng_from_seed(seed)
    samples = []
    for i in range(n):
        feats = rng.normal(size=p)
        if index_feature:
            feats[0] = float(i)        # row identity, used by fold audits
        t = 10.0 if target_fn is None else float(target_fn(i, feats))
        samples.append(Sample(
            features=feats,
            targets={"lut": t, "ff": t, "dsp": t, "bram": t, "fmax": abs(t) + 1.0},
            goal="TP", device_id="d", requested_period=1.0,
        ))
    return Dataset(samples=tuple(samples), feature_space_id="ens")


class _ConstStub:
    """Sub-model that predicts a fixed constant everywhere."""

    def __init__(self, value):
        self.value = float(value)

    def predict(self, X):
        return np.full(len(np.atleast_2d(X)), self.value)


def exact_fit_trainer(X, residuals, seed):
    # residuals are constant whenever the target is constant
    return _ConstStub(residuals[0])


class TestPyramidGeometric:
    C = 40.0

    def _constant_sets(self):
        train = make_dataset(50, target_fn=lambda i, f: self.C, seed=1)
        val = make_dataset(20, target_fn=lambda i, f: self.C, seed=2)
        return train, val

    def test_constant_target_geometric_series_k_up_to_50(self):
        # k iterations at alpha=0.1 must predict exactly c * (1 - 0.9^k)
        train, val = self._constant_sets()
        x = train.samples[0].features
        for k in range(1, 51):
            cfg = PyramidConfig(alpha=0.1, max_iterations=k,
                                target_accuracy=100.0, seed=0)
            model = train_pyramid(train, val, cfg, target="lut",
                                  submodel_trainer=exact_fit_trainer)
            assert model.n_submodels == k
            expected = self.C * (1.0 - 0.9 ** k)
            assert model.predict(x) == pytest.approx(expected, abs=1e-9)

    def test_accuracy_trace_follows_geometric_decay(self):
        train, val = self._constant_sets()
        cfg = PyramidConfig(alpha=0.1, max_iterations=20,
                            target_accuracy=100.0, seed=0)
        model = train_pyramid(train, val, cfg, target="lut",
                              submodel_trainer=exact_fit_trainer)
        for i, acc in enumerate(model.accuracy_trace, start=1):
            assert acc == pytest.approx(100.0 * (1.0 - 0.9 ** i), abs=1e-9)

    def test_iteration_count_never_exceeds_cap(self):
        train, val = self._constant_sets()
        cfg = PyramidConfig(alpha=0.1, max_iterations=50,
                            target_accuracy=100.0, seed=0)
        model = train_pyramid(train, val, cfg, target="lut",
                              submodel_trainer=exact_fit_trainer)
        assert model.n_submodels == 50
        assert model.stop_reasons == [STOP_MAX_ITERATIONS]

    def test_accuracy_met_stops_early(self):
        # oracle: smallest k with 100 * (1 - 0.9^k) >= 99
        k_expected = 1
        while 100.0 * (1.0 - 0.9 ** k_expected) < 99.0:
            k_expected += 1
        train, val = self._constant_sets()
        cfg = PyramidConfig(alpha=0.1, max_iterations=50,
                            target_accuracy=99.0, seed=0)
        model = train_pyramid(train, val, cfg, target="lut",
                              submodel_trainer=exact_fit_trainer)
        assert model.stop_reasons == [STOP_ACCURACY_MET]
        assert model.n_submodels == k_expected
        assert model.achieved_accuracy >= 99.0

    def test_user_stop(self):
        train, val = self._constant_sets()
        cfg = PyramidConfig(alpha=0.1, max_iterations=50, max_order=2,
                            target_accuracy=100.0, seed=0)
        model = train_pyramid(train, val, cfg, target="lut",
                              submodel_trainer=exact_fit_trainer,
                              should_stop=lambda it, acc: it == 7)
        assert model.n_submodels == 7
        assert model.stop_reasons == [STOP_USER]

    def test_mean_baseline_converges_immediately(self):
        train, val = self._constant_sets()
        cfg = PyramidConfig(alpha=0.1, max_iterations=50, target_accuracy=99.0,
                            seed=0, mean_baseline=True)
        model = train_pyramid(train, val, cfg, target="lut",
                              submodel_trainer=exact_fit_trainer)
        assert model.baseline == pytest.approx(self.C)
        assert model.stop_reasons == [STOP_ACCURACY_MET]
        assert model.n_submodels == 1
        assert model.predict(train.samples[0].features) == pytest.approx(self.C, abs=1e-9)

    def test_stalled_validation_warns(self):
        train, val = self._constant_sets()
        cfg = PyramidConfig(alpha=0.1, max_iterations=15,
                            target_accuracy=100.0, seed=0)
        with pytest.warns(UserWarning, match="not improved"):
            train_pyramid(train, val, cfg, target="lut",
                          submodel_trainer=lambda X, r, s: _ConstStub(0.0))

    def test_unmet_accuracy_opens_next_stage(self):
        train, val = self._constant_sets()
        cfg = PyramidConfig(alpha=0.1, max_iterations=3, max_order=2,
                            target_accuracy=100.0, seed=0)
        model = train_pyramid(train, val, cfg, target="lut",
                              submodel_trainer=exact_fit_trainer)
        assert len(model.stages) == 2
        assert all(len(stage) == 3 for stage in model.stages)
        assert model.stop_reasons == [STOP_MAX_ITERATIONS, STOP_MAX_ITERATIONS]

    def test_bootstrap_is_fresh_each_iteration(self):
        train, val = self._constant_sets()
        seen = []

        def recording_trainer(X, residuals, seed):
            seen.append((len(X), seed))
            return _ConstStub(residuals[0])

        cfg = PyramidConfig(alpha=0.1, bootstrap_fraction=0.2, max_iterations=8,
                            target_accuracy=100.0, seed=0)
        train_pyramid(train, val, cfg, target="lut",
                      submodel_trainer=recording_trainer)
        assert all(n == int(np.ceil(0.2 * len(train))) for n, _ in seen)
        assert len({seed for _, seed in seen}) == len(seen)

    def test_feature_space_mismatch_rejected(self):
        train, _ = self._constant_sets()
        other = Dataset(samples=train.samples, feature_space_id="other")
        cfg = PyramidConfig()
        with pytest.raises(DimensionMismatch):
            train_pyramid(train, other, cfg, target="lut",
                          submodel_trainer=exact_fit_trainer)


class TestPyramidConfig:
    @pytest.mark.parametrize("kwargs", [
        {"alpha": 0.0},
        {"alpha": 1.5},
        {"bootstrap_fraction": 0.0},
        {"max_iterations": 0},
        {"max_order": 0},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            PyramidConfig(**kwargs)

    def test_round_trip(self):
        cfg = PyramidConfig(alpha=0.2, max_iterations=10, seed=7)
        assert PyramidConfig.from_dict(cfg.to_dict()) == cfg


class TestPyramidPersistence:
    def test_save_load_predict_bit_exact(self, tmp_path):
        rng = rng_from_seed(5)
        train = make_dataset(60, target_fn=lambda i, f: 30.0 + 4.0 * f[0], seed=3)
        val = make_dataset(25, target_fn=lambda i, f: 30.0 + 4.0 * f[0], seed=4)
        spec = LearnerSpec("mlp", {"hidden_layers": [4], "epochs": 10})
        cfg = PyramidConfig(alpha=0.1, max_iterations=3, target_accuracy=100.0,
                            submodel_spec=spec, seed=0)
        model = train_pyramid(train, val, cfg, target="lut")
        path = tmp_path / "pyr.json"
        save_pyramid(model, path)
        back = load_pyramid(path)
        Xq = rng.normal(size=(30, 3))
        assert np.array_equal(model.predict(Xq), back.predict(Xq))
        assert back.stop_reasons == model.stop_reasons
        assert back.accuracy_trace == model.accuracy_trace
        assert back.config == model.config

    def test_empty_stage_rejected(self):
        with pytest.raises(ValueError):
            PyramidModel(stages=[[]], stop_reasons=[], accuracy_trace=[],
                         achieved_accuracy=0.0, config=PyramidConfig(),
                         n_features=3)


class _FoldAuditStub:
    """Remembers its training rows (via the identity feature) and predicts
    its own serial number, so out-of-fold provenance can be audited."""

    serial = 0

    def __init__(self, X):
        _FoldAuditStub.serial += 1
        self.model_id = float(_FoldAuditStub.serial)
        self.train_rows = set(np.atleast_2d(X)[:, 0].astype(int).tolist())

    def predict(self, X):
        return np.full(len(np.atleast_2d(X)), self.model_id)


class TestClassicStack:
    def test_meta_features_strictly_out_of_fold(self):
        train = make_dataset(40, target_fn=lambda i, f: 20.0 + f[1],
                             seed=9, index_feature=True)
        registry = {}

        def audited_train(spec, X, y, seed):
            stub = _FoldAuditStub(X)
            registry[stub.model_id] = stub
            return stub

        specs = [LearnerSpec("ridge"), LearnerSpec("rf")]
        model = train_classic_stack(train, specs, k=4, target="lut",
                                    seed=0, train_fn=audited_train)
        oof = model.oof_predictions
        assert oof.shape == (40, 2)
        assert not np.isnan(oof).any()
        for row in range(40):
            for col in range(2):
                producer = registry[oof[row, col]]
                assert row not in producer.train_rows
        # final base models see every row
        for base in model.base_models:
            assert base.train_rows == set(range(40))

    def test_fold_assignments_cover_all_rows(self):
        train = make_dataset(30, target_fn=lambda i, f: 15.0 + f[0], seed=2)
        model = train_classic_stack(
            train, [LearnerSpec("ridge"), LearnerSpec("ridge", {"lambda": 5.0})],
            k=3, target="lut", seed=1)
        fa = model.fold_assignments
        assert set(fa.tolist()) == {0, 1, 2}
        assert (fa >= 0).all()

    def test_noise_learner_gets_small_meta_coefficient(self):
        train = make_dataset(200, target_fn=lambda i, f: 50.0 + 5.0 * f[0], seed=6)

        def train_fn(spec, X, y, seed):
            if spec.kind == "rf":     # stand-in for an uninformative learner
                class _Noise:
                    def predict(self, Xq):
                        Xq = np.atleast_2d(Xq)
                        return 50.0 + np.sin(1e3 * Xq.sum(axis=1))
                return _Noise()
            return train_learner(spec, X, y, seed=seed)

        specs = [LearnerSpec("ridge", {"lambda": 1e-6}), LearnerSpec("rf")]
        model = train_classic_stack(train, specs, k=4, target="lut",
                                    seed=0, train_fn=train_fn)
        w = model.meta_coefficients()
        assert abs(w[1]) < 0.1 * abs(w[0])
        assert w[0] == pytest.approx(1.0, abs=0.1)

    def test_k_below_two_rejected(self):
        train = make_dataset(20)
        with pytest.raises(ValueError):
            train_classic_stack(train, [LearnerSpec("ridge")], k=1, target="lut")

    def test_persistence_round_trip(self):
        train = make_dataset(50, target_fn=lambda i, f: 25.0 + 2.0 * f[2], seed=8)
        specs = [LearnerSpec("ridge", {"lambda": 0.5}),
                 LearnerSpec("ridge", {"lambda": 5.0})]
        model = train_classic_stack(train, specs, k=3, target="lut", seed=0)
        back = StackedModel.from_dict(model.to_dict())
        Xq = rng_from_seed(11).normal(size=(20, 3))
        assert np.array_equal(model.predict(Xq), back.predict(Xq))
        assert isinstance(model.predict(Xq[0]), float)
