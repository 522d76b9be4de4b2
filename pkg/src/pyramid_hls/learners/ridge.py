"""Ridge regression via normal equations with a Cholesky factorization.

The bias is unregularized; training on z-scored data makes the intercept
of the standardized problem exactly zero, so the penalty touches only the
slope coefficients.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import SingularSystem
from .base import LearnerSpec, Scaler, TrainedModel, _envelope_kwargs, train_relative_rmse


class RidgeModel(TrainedModel):
    model_kind = "ridge"

    def __init__(self, weights: np.ndarray, **kwargs):
        super().__init__(**kwargs)
        self.weights = np.asarray(weights, dtype=float)

    def _predict_standardized(self, Xz: np.ndarray) -> np.ndarray:
        return Xz @ self.weights

    def effective_coefficients(self) -> tuple[np.ndarray, float]:
        """Slope and intercept in original (de-standardized) units."""
        w = self.weights * self.y_scaler.std[0] / self.x_scaler.std
        b = self.y_scaler.mean[0] - float(w @ self.x_scaler.mean)
        return w, b

    def _parameters_dict(self) -> dict:
        return {"weights": self.weights.tolist()}

    @classmethod
    def _from_dict(cls, d: dict) -> "RidgeModel":
        return cls(weights=np.array(d["parameters"]["weights"]), **_envelope_kwargs(d))


def train_ridge(X: np.ndarray, y: np.ndarray, lam: float = 1.0) -> RidgeModel:
    """Minimize ||Xw - y||^2 + lam * ||w||^2 in standardized space.

    With lam = 0 a rank-deficient design raises :class:`SingularSystem`.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    x_scaler = Scaler.fit(X)
    y_scaler = Scaler.fit(y.reshape(-1, 1))
    Xz = x_scaler.transform(X)
    yz = y_scaler.transform(y.reshape(-1, 1)).ravel()

    p = Xz.shape[1]
    # rounding can leave the Cholesky pivots barely positive on an exactly
    # rank-deficient design, so the unregularized path checks rank directly
    if lam == 0.0 and np.linalg.matrix_rank(Xz) < p:
        raise SingularSystem(
            "normal equations not positive definite (rank-deficient design with lambda=0)"
        )
    A = Xz.T @ Xz + lam * np.eye(p)
    try:
        w = cho_solve(cho_factor(A), Xz.T @ yz)
    except LinAlgError:
        raise SingularSystem(
            "normal equations not positive definite (rank-deficient design with lambda=0)"
        ) from None

    spec = LearnerSpec("ridge", {"lambda": lam})
    model = RidgeModel(weights=w, spec=spec, x_scaler=x_scaler, y_scaler=y_scaler)
    model.training_stats = {
        "train_rmse_rel": train_relative_rmse(model, X, y),
        "epochs_or_trees": 1,
    }
    return model
