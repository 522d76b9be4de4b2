"""Grid search over learner specs by k-fold cross-validated relative RMSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset, kfold
from ..errors import PyramidError
from .base import LearnerSpec


@dataclass
class GridCell:
    spec: LearnerSpec
    cv_rmse_rel: float | None      # mean over folds, %; None when the cell failed
    fold_scores: list[float]
    error: str | None = None


@dataclass
class GridSearchResult:
    best: LearnerSpec
    best_index: int
    cells: list[GridCell]


def _rel_rmse(pred: np.ndarray, actual: np.ndarray) -> float:
    mask = actual != 0
    rel = (pred[mask] - actual[mask]) / actual[mask]
    return float(np.sqrt(np.mean(rel ** 2)) * 100.0)


def grid_search(ds: Dataset, target: str, grid: list[LearnerSpec], k: int,
                seed: int = 0) -> GridSearchResult:
    """Evaluate every spec by k-fold CV; argmin of mean relative RMSE.

    Ties break to the lowest grid index. A failing cell is recorded and
    skipped rather than aborting the search.
    """
    from . import train

    if not grid:
        raise ValueError("grid must be non-empty")
    X = ds.feature_matrix()
    y = ds.target_vector(target)
    folds = kfold(ds, k, seed)

    cells: list[GridCell] = []
    for spec in grid:
        scores: list[float] = []
        error = None
        try:
            for train_idx, val_idx in folds:
                model = train(spec, X[train_idx], y[train_idx], seed=seed)
                scores.append(_rel_rmse(model.predict(X[val_idx]), y[val_idx]))
        except PyramidError as exc:
            error = f"{type(exc).__name__}: {exc}"
        if error is None:
            cells.append(GridCell(spec, float(np.mean(scores)), scores))
        else:
            cells.append(GridCell(spec, None, scores, error=error))

    scored = [(i, c.cv_rmse_rel) for i, c in enumerate(cells) if c.cv_rmse_rel is not None]
    if not scored:
        raise PyramidError("every grid cell failed")
    best_index = min(scored, key=lambda t: t[1])[0]
    return GridSearchResult(best=cells[best_index].spec, best_index=best_index, cells=cells)
