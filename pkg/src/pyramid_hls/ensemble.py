"""Stacking ensembles.

Two combiners live here:

- :func:`train_pyramid` builds the iterative mixture: each iteration fits a
  fresh sub-model to the current residuals on a with-replacement sample of
  the training set and adds it with a fixed mixing coefficient alpha
  (F_0 = 0, F_i = F_{i-1} + alpha * P_i). Validation accuracy
  (100 - relative RMSE%) drives stopping; an unmet accuracy target can
  open further stages up to ``max_order``.
- :func:`train_classic_stack` is the two-level combiner: a ridge
  meta-learner fit on strictly out-of-fold predictions of the four base
  learners, which are then refit on the full training set.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, kfold, rng_from_seed
from .errors import DimensionMismatch
from .evaluation import relative_rmse
from .learners import LearnerSpec, model_from_dict, train as train_learner
from .learners.ridge import train_ridge

STOP_ACCURACY_MET = "AccuracyMet"
STOP_MAX_ITERATIONS = "MaxIterations"
STOP_USER = "UserStop"

STALL_WINDOW = 10


def _default_submodel_spec() -> LearnerSpec:
    return LearnerSpec("mlp", {
        "hidden_layers": [20], "epochs": 150, "learning_rate": 0.05,
        "momentum": 0.9, "batch_size": None,
    })


@dataclass(frozen=True)
class PyramidConfig:
    alpha: float = 0.1
    submodel_spec: LearnerSpec = field(default_factory=_default_submodel_spec)
    bootstrap_fraction: float = 0.2
    target_accuracy: float = 99.0
    max_iterations: int = 50
    max_order: int = 1
    seed: int = 0
    mean_baseline: bool = False    # start from the target mean instead of 0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 < self.bootstrap_fraction <= 1:
            raise ValueError("bootstrap_fraction must be in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "submodel_spec": self.submodel_spec.to_dict(),
            "bootstrap_fraction": self.bootstrap_fraction,
            "target_accuracy": self.target_accuracy,
            "max_iterations": self.max_iterations,
            "max_order": self.max_order,
            "seed": self.seed,
            "mean_baseline": self.mean_baseline,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PyramidConfig":
        d = dict(d)
        d["submodel_spec"] = LearnerSpec.from_dict(d["submodel_spec"])
        return cls(**d)


class PyramidModel:
    """Ordered stages of (sub-model, alpha) pairs plus stopping metadata.

    Prediction = baseline + sum over stages of sum of alpha * submodel(x).
    """

    def __init__(self, stages, stop_reasons, accuracy_trace, achieved_accuracy,
                 config: PyramidConfig, baseline: float = 0.0, n_features: int | None = None):
        if not stages or any(len(stage) == 0 for stage in stages):
            raise ValueError("every stage must hold at least one sub-model")
        self.stages = stages                      # list[list[(model, alpha)]]
        self.stop_reasons = stop_reasons          # one per stage
        self.accuracy_trace = accuracy_trace      # list of per-iteration val accuracies
        self.achieved_accuracy = achieved_accuracy
        self.config = config
        self.baseline = baseline
        self.n_features = n_features if n_features is not None else stages[0][0][0].n_features

    def predict(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"pyramid expects {self.n_features} features, got {X2.shape[1]}"
            )
        out = np.full(len(X2), self.baseline, dtype=float)
        for stage in self.stages:
            for submodel, alpha in stage:
                out += alpha * np.asarray(submodel.predict(X2), dtype=float)
        return float(out[0]) if single else out

    @property
    def n_submodels(self) -> int:
        return sum(len(stage) for stage in self.stages)

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "model_kind": "pyramid",
            "config": self.config.to_dict(),
            "baseline": self.baseline,
            "n_features": self.n_features,
            "stages": [
                [{"submodel": m.to_dict(), "alpha": a} for m, a in stage]
                for stage in self.stages
            ],
            "stop_reasons": self.stop_reasons,
            "accuracy_trace": self.accuracy_trace,
            "achieved_accuracy": self.achieved_accuracy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PyramidModel":
        return cls(
            stages=[
                [(model_from_dict(e["submodel"]), e["alpha"]) for e in stage]
                for stage in d["stages"]
            ],
            stop_reasons=list(d["stop_reasons"]),
            accuracy_trace=list(d["accuracy_trace"]),
            achieved_accuracy=d["achieved_accuracy"],
            config=PyramidConfig.from_dict(d["config"]),
            baseline=d["baseline"],
            n_features=d["n_features"],
        )


def save_pyramid(model: PyramidModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2), encoding="utf-8")


def load_pyramid(path) -> PyramidModel:
    return PyramidModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_pyramid(train: Dataset, val: Dataset, cfg: PyramidConfig,
                  target: str = "fmax", submodel_trainer=None,
                  should_stop=None) -> PyramidModel:
    """Iterative residual-fitting loop; see the module docstring.

    ``submodel_trainer(X, residuals, seed) -> model`` overrides the
    configured learner (used with stub learners in tests).
    ``should_stop(iteration, accuracy)`` returning True stops with UserStop.
    """
    if train.feature_space_id != val.feature_space_id:
        raise DimensionMismatch("train and validation sets use different feature spaces")
    X_train = train.feature_matrix()
    y_train = train.target_vector(target)
    X_val = val.feature_matrix()
    y_val = val.target_vector(target)
    n = len(y_train)

    if submodel_trainer is None:
        def submodel_trainer(X, r, seed):
            return train_learner(cfg.submodel_spec, X, r, seed=seed)

    seed_rng = rng_from_seed(cfg.seed)
    baseline = float(y_train.mean()) if cfg.mean_baseline else 0.0
    F_train = np.full(n, baseline)
    F_val = np.full(len(y_val), baseline)

    stages = []
    stop_reasons = []
    accuracy_trace: list[float] = []
    best_accuracy = -np.inf
    stall = 0
    accuracy = -np.inf

    for order in range(1, cfg.max_order + 1):
        stage = []
        stop_reason = STOP_MAX_ITERATIONS
        for iteration in range(1, cfg.max_iterations + 1):
            # fresh bootstrap sample each iteration
            sub_seed = int(seed_rng.integers(0, 2 ** 63))
            size = int(np.ceil(cfg.bootstrap_fraction * n))
            idx = rng_from_seed(sub_seed).integers(0, n, size=size)

            residuals = y_train - F_train
            submodel = submodel_trainer(X_train[idx], residuals[idx], sub_seed)
            stage.append((submodel, cfg.alpha))

            F_train = F_train + cfg.alpha * np.asarray(submodel.predict(X_train), dtype=float)
            F_val = F_val + cfg.alpha * np.asarray(submodel.predict(X_val), dtype=float)

            accuracy = 100.0 - relative_rmse(F_val, y_val)
            accuracy_trace.append(accuracy)

            if accuracy > best_accuracy:
                best_accuracy = accuracy
                stall = 0
            else:
                stall += 1
                if stall == STALL_WINDOW:
                    warnings.warn(
                        f"validation accuracy has not improved for {STALL_WINDOW} iterations",
                        stacklevel=2,
                    )

            if should_stop is not None and should_stop(iteration, accuracy):
                stop_reason = STOP_USER
                break
            if accuracy >= cfg.target_accuracy:
                stop_reason = STOP_ACCURACY_MET
                break

        stages.append(stage)
        stop_reasons.append(stop_reason)
        if stop_reason in (STOP_ACCURACY_MET, STOP_USER):
            break

    return PyramidModel(
        stages=stages,
        stop_reasons=stop_reasons,
        accuracy_trace=accuracy_trace,
        achieved_accuracy=accuracy,
        config=cfg,
        baseline=baseline,
        n_features=X_train.shape[1],
    )


def predict_pyramid(model: PyramidModel, v: np.ndarray):
    return model.predict(v)


class StackedModel:
    """Two-level stack: refit base learners plus a ridge meta-learner."""

    def __init__(self, base_models, meta_model, fold_assignments=None,
                 oof_predictions=None):
        self.base_models = base_models
        self.meta_model = meta_model
        # bookkeeping retained so fold hygiene can be audited
        self.fold_assignments = fold_assignments
        self.oof_predictions = oof_predictions

    @property
    def n_features(self) -> int:
        return self.base_models[0].n_features

    def predict(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        meta_X = np.column_stack([
            np.asarray(m.predict(X2), dtype=float) for m in self.base_models
        ])
        out = np.asarray(self.meta_model.predict(meta_X), dtype=float)
        return float(out[0]) if single else out

    def meta_coefficients(self) -> np.ndarray:
        w, _ = self.meta_model.effective_coefficients()
        return w

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "model_kind": "stack",
            "bases": [m.to_dict() for m in self.base_models],
            "meta": self.meta_model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StackedModel":
        return cls(
            base_models=[model_from_dict(b) for b in d["bases"]],
            meta_model=model_from_dict(d["meta"]),
        )


def train_classic_stack(train: Dataset, base_specs, k: int, target: str = "fmax",
                        seed: int = 0, meta_lambda: float = 1e-3,
                        train_fn=None) -> StackedModel:
    """Breiman-style stacked regression over the base learner specs.

    Meta-features are strictly out-of-fold: the prediction for a row always
    comes from base learners trained on folds that exclude that row.
    ``train_fn(spec, X, y, seed)`` is injectable for instrumentation.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if train_fn is None:
        train_fn = train_learner
    X = train.feature_matrix()
    y = train.target_vector(target)
    folds = kfold(train, k, seed)

    n = len(y)
    oof = np.full((n, len(base_specs)), np.nan)
    fold_assignments = np.full(n, -1, dtype=int)
    for fold_id, (train_idx, val_idx) in enumerate(folds):
        fold_assignments[val_idx] = fold_id
        for col, spec in enumerate(base_specs):
            model = train_fn(spec, X[train_idx], y[train_idx], seed=seed)
            oof[val_idx, col] = np.asarray(model.predict(X[val_idx]), dtype=float)

    meta_model = train_ridge(oof, y, lam=meta_lambda)
    base_models = [train_fn(spec, X, y, seed=seed) for spec in base_specs]
    return StackedModel(
        base_models=base_models,
        meta_model=meta_model,
        fold_assignments=fold_assignments,
        oof_predictions=oof,
    )
