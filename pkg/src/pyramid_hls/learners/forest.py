"""Bagged CART regression trees with variance-reduction splits.

Prediction is the arithmetic mean over trees. Feature importances are the
impurity (SSE) decreases accumulated per feature, normalized to sum to 1;
a forest that never splits reports a uniform importance vector.
"""

from __future__ import annotations

import numpy as np

from ..dataset import rng_from_seed
from ..errors import DimensionMismatch
from .base import LearnerSpec, Scaler, TrainedModel, _envelope_kwargs, train_relative_rmse


class _Tree:
    """Array-encoded binary tree. Leaf nodes have feature == -1."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _add(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature = np.array(self.feature)
        threshold = np.array(self.threshold)
        left = np.array(self.left)
        right = np.array(self.right)
        value = np.array(self.value)
        node = np.zeros(len(X), dtype=int)
        while True:
            at_leaf = feature[node] == -1
            if at_leaf.all():
                break
            go = ~at_leaf
            f = feature[node[go]]
            goes_left = X[go, f] < threshold[node[go]]
            nxt = np.where(goes_left, left[node[go]], right[node[go]])
            node[go] = nxt
        return value[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature, "threshold": self.threshold,
            "left": self.left, "right": self.right, "value": self.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "_Tree":
        t = cls()
        t.feature = list(d["feature"])
        t.threshold = list(d["threshold"])
        t.left = list(d["left"])
        t.right = list(d["right"])
        t.value = list(d["value"])
        return t


def _best_split(X: np.ndarray, y: np.ndarray, feat_idx: np.ndarray, min_leaf: int):
    """Best (feature, threshold, sse_after) over the candidate features.

    Vectorized: sorts every candidate column once and scans all split
    positions via cumulative sums.
    """
    n = len(y)
    if n < 2 * min_leaf:
        return None
    Xs = X[:, feat_idx]
    order = np.argsort(Xs, axis=0, kind="stable")
    Xo = np.take_along_axis(Xs, order, axis=0)
    yo = y[order]

    csum = np.cumsum(yo, axis=0)
    csq = np.cumsum(yo ** 2, axis=0)
    total_sum = csum[-1]
    total_sq = csq[-1]

    nL = np.arange(1, n, dtype=float)[:, None]
    nR = n - nL
    sumL, sqL = csum[:-1], csq[:-1]
    sse = (sqL - sumL ** 2 / nL) + ((total_sq - sqL) - (total_sum - sumL) ** 2 / nR)

    valid = (Xo[1:] > Xo[:-1]) & (nL >= min_leaf) & (nR >= min_leaf)
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)
    flat = int(np.argmin(sse))
    pos, col = divmod(flat, sse.shape[1])
    threshold = 0.5 * (Xo[pos, col] + Xo[pos + 1, col])
    return int(feat_idx[col]), float(threshold), float(sse[pos, col])


def _grow(tree: _Tree, X: np.ndarray, y: np.ndarray, idx: np.ndarray, depth: int,
          max_depth: int, min_leaf: int, n_feat_split: int,
          rng: np.random.Generator, importances: np.ndarray) -> int:
    node = tree._add()
    yn = y[idx]
    tree.value[node] = float(yn.mean())
    sse_here = float(((yn - yn.mean()) ** 2).sum())
    if depth >= max_depth or len(idx) < 2 * min_leaf or sse_here <= 0.0:
        return node
    feat_idx = rng.choice(X.shape[1], size=min(n_feat_split, X.shape[1]), replace=False)
    found = _best_split(X[idx], yn, np.sort(feat_idx), min_leaf)
    if found is None:
        return node
    f, thr, sse_after = found
    if sse_after >= sse_here:
        return node
    importances[f] += sse_here - sse_after
    mask = X[idx, f] < thr
    tree.feature[node] = f
    tree.threshold[node] = thr
    tree.left[node] = _grow(tree, X, y, idx[mask], depth + 1, max_depth,
                            min_leaf, n_feat_split, rng, importances)
    tree.right[node] = _grow(tree, X, y, idx[~mask], depth + 1, max_depth,
                             min_leaf, n_feat_split, rng, importances)
    return node


class ForestModel(TrainedModel):
    model_kind = "rf"

    def __init__(self, trees: list[_Tree], importances: np.ndarray, **kwargs):
        super().__init__(**kwargs)
        self.trees = trees
        self.importances = np.asarray(importances, dtype=float)

    def _predict_standardized(self, Xz: np.ndarray) -> np.ndarray:
        preds = np.stack([t.predict(Xz) for t in self.trees])
        return preds.mean(axis=0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        # aggregated in original units so the forest mean identity is exact
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"model expects {self.n_features} features, got {X2.shape[1]}"
            )
        out = self.tree_predictions(X2).mean(axis=0)
        return float(out[0]) if single else out

    def tree_predictions(self, X: np.ndarray) -> np.ndarray:
        """Per-tree predictions in original units, shape (n_trees, n)."""
        Xz = self.x_scaler.transform(np.atleast_2d(np.asarray(X, dtype=float)))
        out = np.stack([t.predict(Xz) for t in self.trees])
        return self.y_scaler.inverse(out.reshape(-1, 1)).reshape(out.shape)

    def _parameters_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "importances": self.importances.tolist(),
        }

    @classmethod
    def _from_dict(cls, d: dict) -> "ForestModel":
        p = d["parameters"]
        return cls(
            trees=[_Tree.from_dict(t) for t in p["trees"]],
            importances=np.array(p["importances"]),
            **_envelope_kwargs(d),
        )


def train_rf(X: np.ndarray, y: np.ndarray, n_trees: int = 100,
             max_depth: int = 12, min_samples_leaf: int = 2,
             feature_subsample: float = 1 / 3, seed: int = 0,
             bootstrap_rows: bool = True) -> ForestModel:
    """feature_subsample is the fraction of features drawn per split."""
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    x_scaler = Scaler.fit(X)
    y_scaler = Scaler.fit(y.reshape(-1, 1))
    Xz = x_scaler.transform(X)
    yz = y_scaler.transform(y.reshape(-1, 1)).ravel()

    n, p = Xz.shape
    n_feat_split = max(1, int(round(feature_subsample * p)))
    master = rng_from_seed(seed)
    importances = np.zeros(p)
    trees = []
    for _ in range(n_trees):
        rng = rng_from_seed(int(master.integers(0, 2 ** 63)))
        rows = rng.integers(0, n, size=n) if bootstrap_rows else np.arange(n)
        tree = _Tree()
        _grow(tree, Xz, yz, np.asarray(rows), 0, max_depth, min_samples_leaf,
              n_feat_split, rng, importances)
        trees.append(tree)

    total = importances.sum()
    importances = importances / total if total > 0 else np.full(p, 1.0 / p)

    spec = LearnerSpec("rf", {
        "n_trees": n_trees, "max_depth": max_depth,
        "min_samples_leaf": min_samples_leaf,
        "feature_subsample": feature_subsample, "seed": seed,
        "bootstrap_rows": bootstrap_rows,
    })
    model = ForestModel(trees=trees, importances=importances, spec=spec,
                        x_scaler=x_scaler, y_scaler=y_scaler)
    model.training_stats = {
        "train_rmse_rel": train_relative_rmse(model, X, y),
        "epochs_or_trees": n_trees,
    }
    return model
