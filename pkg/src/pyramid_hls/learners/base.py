"""Shared learner plumbing: specs, scaling, persistence envelope.

All learners train in standardized space (features and target z-scored
with training statistics) and de-standardize predictions, so relative
errors are always computed in original units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DimensionMismatch

FORMAT_VERSION = 1

KINDS = ("ridge", "mlp", "svr", "rf")


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "LearnerSpec":
        return cls(kind=d["kind"], params=dict(d["params"]))


@dataclass(frozen=True)
class Scaler:
    """Per-column z-score transform; zero-variance columns pass through."""
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, M: np.ndarray) -> "Scaler":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        std = M.std(axis=0)
        return cls(mean=M.mean(axis=0), std=np.where(std > 0, std, 1.0))

    def transform(self, M: np.ndarray) -> np.ndarray:
        return (np.asarray(M, dtype=float) - self.mean) / self.std

    def inverse(self, M: np.ndarray) -> np.ndarray:
        return np.asarray(M, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(mean=np.array(d["mean"]), std=np.array(d["std"]))


class TrainedModel:
    """Base class: standardization, input checks, persistence envelope."""

    model_kind: str = ""

    def __init__(self, spec: LearnerSpec, x_scaler: Scaler, y_scaler: Scaler,
                 training_stats: dict | None = None):
        self.spec = spec
        self.x_scaler = x_scaler
        self.y_scaler = y_scaler
        self.training_stats = training_stats or {}

    @property
    def n_features(self) -> int:
        return len(self.x_scaler.mean)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Predict in original target units; accepts (n, p) or (p,)."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"model expects {self.n_features} features, got {X2.shape[1]}"
            )
        z = self._predict_standardized(self.x_scaler.transform(X2))
        out = self.y_scaler.inverse(z.reshape(-1, 1)).ravel()
        return float(out[0]) if single else out

    def _predict_standardized(self, Xz: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # --- persistence --------------------------------------------------------

    def _parameters_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "model_kind": self.model_kind,
            "spec": self.spec.to_dict(),
            "x_scaler": self.x_scaler.to_dict(),
            "y_scaler": self.y_scaler.to_dict(),
            "training_stats": self.training_stats,
            "parameters": self._parameters_dict(),
        }


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2), encoding="utf-8")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def model_from_dict(d: dict):
    from . import forest, mlp, ridge, svr

    registry = {
        "ridge": ridge.RidgeModel,
        "mlp": mlp.MlpModel,
        "svr": svr.SvrModel,
        "rf": forest.ForestModel,
    }
    cls = registry[d["model_kind"]]
    return cls._from_dict(d)


def _envelope_kwargs(d: dict) -> dict:
    return {
        "spec": LearnerSpec.from_dict(d["spec"]),
        "x_scaler": Scaler.from_dict(d["x_scaler"]),
        "y_scaler": Scaler.from_dict(d["y_scaler"]),
        "training_stats": d["training_stats"],
    }


def train_relative_rmse(model, X: np.ndarray, y: np.ndarray) -> float:
    """Relative RMSE (%) on training data, skipping zero actuals."""
    y = np.asarray(y, dtype=float)
    pred = model.predict(X)
    mask = y != 0
    if not mask.any():
        return float("nan")
    rel = (pred[mask] - y[mask]) / y[mask]
    return float(np.sqrt(np.mean(rel ** 2)) * 100.0)
