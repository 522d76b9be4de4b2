"""Four base regressors with a uniform train/predict contract."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch
from .base import (
    KINDS,
    LearnerSpec,
    Scaler,
    TrainedModel,
    load_model,
    model_from_dict,
    save_model,
    train_relative_rmse,
)
from .forest import ForestModel, train_rf
from .grid import GridSearchResult, grid_search
from .mlp import MlpModel, train_mlp
from .ridge import RidgeModel, train_ridge
from .svr import SvrModel, train_svr

__all__ = [
    "KINDS", "LearnerSpec", "Scaler", "TrainedModel",
    "RidgeModel", "MlpModel", "SvrModel", "ForestModel",
    "train", "train_ridge", "train_mlp", "train_svr", "train_rf",
    "predict", "grid_search", "GridSearchResult",
    "save_model", "load_model", "model_from_dict", "train_relative_rmse",
]


def train(spec: LearnerSpec, X: np.ndarray, y: np.ndarray, seed: int = 0) -> TrainedModel:
    """Dispatch on spec.kind; the spec's own seed (if set) wins."""
    params = dict(spec.params)
    if spec.kind == "ridge":
        return train_ridge(X, y, lam=params.get("lambda", 1.0))
    params.setdefault("seed", seed)
    if spec.kind == "mlp":
        return train_mlp(X, y, **params)
    if spec.kind == "svr":
        return train_svr(X, y, **params)
    if spec.kind == "rf":
        return train_rf(X, y, **params)
    raise ValueError(f"unknown learner kind {spec.kind!r}")


def predict(model: TrainedModel, v: np.ndarray):
    """Deterministic scalar (or vector) prediction in original units."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1 and len(v) != model.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, got {len(v)}"
        )
    return model.predict(v)
