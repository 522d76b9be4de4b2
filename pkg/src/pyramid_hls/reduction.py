"""Two-stage feature reduction: correlation-group pruning, then pruning by
thresholded coefficients of an L2-regularized linear fit.

Stage 1 groups features whose pairwise |Pearson r| reaches ``corr_threshold``
(transitive closure) and keeps the lowest-index feature of each group.
Stage 2 z-scores the surviving columns and the targets, fits one ridge
model per target, and keeps a feature when the largest standardized
coefficient magnitude across targets reaches ``coef_threshold``. Strict L2
never zeroes coefficients exactly, so the threshold is what turns shrinkage
into selection; an L1 stage is deliberately out of scope here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dataset import TARGETS, Dataset
from .errors import EmptyRecipe, ManifestMismatch
from .manifest import RawFeatureVector

DEFAULT_CORR_THRESHOLD = 0.95
DEFAULT_COEF_THRESHOLD = 0.01
DEFAULT_LAMBDA = 1.0


@dataclass(frozen=True)
class ReducedFeatureVector:
    values: np.ndarray
    selection: str          # recipe identifier


@dataclass(frozen=True)
class ReductionRecipe:
    manifest_id: str
    corr_threshold: float
    lam: float
    coef_threshold: float
    kept_indices: tuple[int, ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]

    def __post_init__(self):
        if len(self.kept_indices) == 0:
            raise EmptyRecipe("recipe keeps no features")
        idx = list(self.kept_indices)
        if idx != sorted(set(idx)):
            raise ValueError("kept_indices must be strictly increasing and unique")

    @property
    def recipe_id(self) -> str:
        return f"{self.manifest_id}/reduced{len(self.kept_indices)}"

    def to_json(self) -> str:
        return json.dumps({
            "manifest_id": self.manifest_id,
            "corr_threshold": self.corr_threshold,
            "lambda": self.lam,
            "coef_threshold": self.coef_threshold,
            "kept_indices": list(self.kept_indices),
            "means": list(self.means),
            "stds": list(self.stds),
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ReductionRecipe":
        d = json.loads(text)
        return cls(
            manifest_id=d["manifest_id"],
            corr_threshold=d["corr_threshold"],
            lam=d["lambda"],
            coef_threshold=d["coef_threshold"],
            kept_indices=tuple(d["kept_indices"]),
            means=tuple(d["means"]),
            stds=tuple(d["stds"]),
        )


def pearson(x, y) -> float:
    """Sample Pearson r; a zero-variance series yields r = 0 (see
    :func:`pearson_with_flag`) so constant features form their own group."""
    r, _ = pearson_with_flag(x, y)
    return r


def pearson_with_flag(x, y) -> tuple[float, bool]:
    """Pearson r plus a flag marking the constant-series convention."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need two equal-length 1-D series of length >= 2")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = np.sqrt(np.dot(xd, xd))
    sy = np.sqrt(np.dot(yd, yd))
    if sx == 0 or sy == 0:
        return 0.0, True
    return float(np.dot(xd, yd) / (sx * sy)), False


def _correlation_matrix(X: np.ndarray) -> np.ndarray:
    """All-pairs |safe| correlation; zero-variance columns correlate 0 with
    everything (and 0 with themselves, matching the constant convention)."""
    Xd = X - X.mean(axis=0)
    norms = np.sqrt((Xd ** 2).sum(axis=0))
    ok = norms > 0
    scale = np.where(ok, norms, 1.0)
    C = (Xd / scale).T @ (Xd / scale)
    C[~ok, :] = 0.0
    C[:, ~ok] = 0.0
    np.clip(C, -1.0, 1.0, out=C)
    return C


def correlation_prune(ds: Dataset, corr_threshold: float = DEFAULT_CORR_THRESHOLD,
                      ) -> tuple[list[list[int]], list[int]]:
    """Partition features into correlation groups; survivors are the lowest
    manifest index of each group. Returns (groups, survivors)."""
    if not 0 < corr_threshold <= 1:
        raise ValueError("corr_threshold must be in (0, 1]")
    X = ds.feature_matrix()
    p = X.shape[1]
    C = np.abs(_correlation_matrix(X))

    parent = list(range(p))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    ii, jj = np.nonzero(np.triu(C, k=1) >= corr_threshold)
    for i, j in zip(ii.tolist(), jj.tolist()):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    groups_by_root: dict[int, list[int]] = {}
    for i in range(p):
        groups_by_root.setdefault(find(i), []).append(i)
    groups = [sorted(g) for g in sorted(groups_by_root.values(), key=min)]
    survivors = [g[0] for g in groups]
    return groups, survivors


def _ridge_coefficients(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Ridge on already-standardized data, no intercept."""
    p = X.shape[1]
    A = X.T @ X + lam * np.eye(p)
    return cho_solve(cho_factor(A), X.T @ y)


def _standardize_columns(M: np.ndarray) -> np.ndarray:
    mean = M.mean(axis=0)
    std = M.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (M - mean) / std


def coefficient_prune(ds: Dataset, lam: float = DEFAULT_LAMBDA,
                      coef_threshold: float = DEFAULT_COEF_THRESHOLD,
                      candidate_indices: list[int] | None = None) -> list[int]:
    """Keep candidates whose max |standardized ridge coefficient| over the
    five targets reaches the threshold. Candidates default to the survivors
    of :func:`correlation_prune` at the default correlation threshold."""
    if lam <= 0:
        raise ValueError("lambda must be > 0 for the pruning fit")
    if coef_threshold < 0:
        raise ValueError("coef_threshold must be >= 0")
    if candidate_indices is None:
        _, candidate_indices = correlation_prune(ds)
    X = _standardize_columns(ds.feature_matrix()[:, candidate_indices])
    max_coef = np.zeros(len(candidate_indices))
    for target in TARGETS:
        y = ds.target_vector(target)
        sy = y.std()
        y = (y - y.mean()) / (sy if sy > 0 else 1.0)
        w = _ridge_coefficients(X, y, lam)
        max_coef = np.maximum(max_coef, np.abs(w))
    return [idx for idx, c in zip(candidate_indices, max_coef) if c >= coef_threshold]


def build_recipe(ds: Dataset, manifest_id: str,
                 corr_threshold: float = DEFAULT_CORR_THRESHOLD,
                 lam: float = DEFAULT_LAMBDA,
                 coef_threshold: float = DEFAULT_COEF_THRESHOLD) -> ReductionRecipe:
    """Run both stages on a training dataset and freeze the outcome,
    including the training-set standardization statistics."""
    _, survivors = correlation_prune(ds, corr_threshold)
    kept = coefficient_prune(ds, lam, coef_threshold, candidate_indices=survivors)
    if not kept:
        raise EmptyRecipe("both stages pruned every feature")
    cols = ds.feature_matrix()[:, kept]
    means = cols.mean(axis=0)
    stds = cols.std(axis=0)
    return ReductionRecipe(
        manifest_id=manifest_id,
        corr_threshold=corr_threshold,
        lam=lam,
        coef_threshold=coef_threshold,
        kept_indices=tuple(int(i) for i in kept),
        means=tuple(float(v) for v in means),
        stds=tuple(float(v) for v in stds),
    )


def apply_recipe(recipe: ReductionRecipe, v: RawFeatureVector) -> ReducedFeatureVector:
    """Project a raw vector onto the recipe's kept indices, order preserved."""
    if v.manifest_id != recipe.manifest_id:
        raise ManifestMismatch(
            f"vector built from {v.manifest_id!r}, recipe expects {recipe.manifest_id!r}"
        )
    idx = np.array(recipe.kept_indices, dtype=int)
    if idx.max() >= len(v.values):
        raise ManifestMismatch("recipe index outside vector range")
    return ReducedFeatureVector(values=v.values[idx], selection=recipe.recipe_id)


def apply_recipe_dataset(recipe: ReductionRecipe, ds: Dataset) -> Dataset:
    """Project every sample of a raw-space dataset into the reduced space."""
    X = ds.feature_matrix()
    idx = np.array(recipe.kept_indices, dtype=int)
    if X.shape[1] <= idx.max():
        raise ManifestMismatch("dataset narrower than recipe indices")
    return ds.with_features(X[:, idx], recipe.recipe_id)
