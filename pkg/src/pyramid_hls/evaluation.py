"""Relative RMSE metric and the cross-validated reporting harness.

relative_rmse is the scale-relative error:
sqrt(mean(((predicted - actual) / actual)^2)) * 100.
It refuses zero actuals outright; the reporting harness excludes
zero-valued resource targets from a cell and reports the exclusion count
instead (zero-resource designs are legitimate, a zero denominator is not).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .dataset import TARGETS, Dataset
from .errors import MissingModel, ZeroActual

RESOURCE_TARGETS = ("lut", "ff", "dsp", "bram")


def relative_rmse(predicted, actual) -> float:
    """Relative RMSE in percent; raises ZeroActual on any zero actual."""
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape or p.ndim != 1 or len(p) < 1:
        raise ValueError("need two equal-length non-empty 1-D series")
    zeros = np.nonzero(a == 0)[0]
    if len(zeros):
        raise ZeroActual(int(zeros[0]))
    rel = (p - a) / a
    return float(np.sqrt(np.mean(rel ** 2)) * 100.0)


def relative_rmse_excluding_zeros(predicted, actual) -> tuple[float, int]:
    """(relative RMSE over nonzero actuals, number of excluded samples).

    Returns (nan, n) when every actual is zero.
    """
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    mask = a != 0
    excluded = int((~mask).sum())
    if not mask.any():
        return float("nan"), excluded
    return relative_rmse(p[mask], a[mask]), excluded


@dataclass
class EvalCell:
    goal: str
    device: str
    category: str
    target: str
    rmse_pct: float
    n: int
    n_excluded: int = 0


@dataclass
class EvalReport:
    cells: list[EvalCell]
    weighted: bool = False

    def mean_over_cells(self, **filters) -> float:
        """Unweighted mean of cell RMSEs matching the filters (the default
        aggregation); weighted=True switches to sample-count weighting."""
        vals, weights = [], []
        for c in self.cells:
            if all(getattr(c, k) == v for k, v in filters.items()):
                if np.isfinite(c.rmse_pct):
                    vals.append(c.rmse_pct)
                    weights.append(c.n)
        if not vals:
            return float("nan")
        if self.weighted:
            return float(np.average(vals, weights=weights))
        return float(np.mean(vals))

    def resource_mean(self, **filters) -> float:
        """Mean of the four per-resource RMSEs (the 'Resource' aggregate)."""
        vals = [self.mean_over_cells(target=t, **filters) for t in RESOURCE_TARGETS]
        vals = [v for v in vals if np.isfinite(v)]
        return float(np.mean(vals)) if vals else float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["goal", "device", "category", "target", "rmse_pct", "n"])
        for c in self.cells:
            writer.writerow([c.goal, c.device, c.category, c.target,
                             repr(c.rmse_pct), c.n])
        return buf.getvalue()

    def to_table(self) -> str:
        header = f"{'goal':5} {'device':22} {'category':14} {'target':7} {'rmse%':>9} {'n':>5}"
        lines = [header, "-" * len(header)]
        for c in self.cells:
            lines.append(
                f"{c.goal:5} {c.device:22} {c.category:14} {c.target:7} "
                f"{c.rmse_pct:9.3f} {c.n:5d}"
            )
        return "\n".join(lines)


def evaluate(models: dict[tuple[str, str], object], test: Dataset,
             grouping: tuple[str, ...] = ("goal", "device", "category"),
             weighted: bool = False) -> EvalReport:
    """Per-cell relative RMSE of a model set on a labeled test set.

    ``models`` maps (goal, target) to any object with ``predict(X)``.
    Cells are formed by the requested grouping keys crossed with targets.
    """
    goals = sorted({s.goal for s in test.samples})
    for goal in goals:
        for target in TARGETS:
            if (goal, target) not in models:
                raise MissingModel(goal, target)

    def key_of(sample):
        parts = []
        if "goal" in grouping:
            parts.append(sample.goal)
        if "device" in grouping:
            parts.append(sample.device_id)
        if "category" in grouping:
            parts.append(sample.category or "uncategorized")
        return tuple(parts)

    groups: dict[tuple, list[int]] = {}
    for i, s in enumerate(test.samples):
        groups.setdefault((s.goal, key_of(s)), []).append(i)

    X = test.feature_matrix()
    cells: list[EvalCell] = []
    for (goal, key), indices in sorted(groups.items()):
        sub = np.array(indices)
        labels = dict(zip([g for g in ("goal", "device", "category") if g in grouping], key))
        for target in TARGETS:
            model = models[(goal, target)]
            actual = test.target_vector(target)[sub]
            pred = np.asarray(model.predict(X[sub]), dtype=float)
            if target in RESOURCE_TARGETS:
                rmse, excluded = relative_rmse_excluding_zeros(pred, actual)
            else:
                rmse, excluded = relative_rmse(pred, actual), 0
            cells.append(EvalCell(
                goal=labels.get("goal", goal),
                device=labels.get("device", "all"),
                category=labels.get("category", "all"),
                target=target,
                rmse_pct=rmse,
                n=len(sub) - excluded,
                n_excluded=excluded,
            ))
    return EvalReport(cells=cells, weighted=weighted)


@dataclass
class LearnerRanking:
    rows: list[dict] = field(default_factory=list)   # label -> per-target rmse + mean

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["learner", *TARGETS, "mean"])
        for row in self.rows:
            writer.writerow([row["learner"], *[repr(row[t]) for t in TARGETS],
                             repr(row["mean"])])
        return buf.getvalue()

    def ranking(self) -> list[str]:
        return [r["learner"] for r in sorted(self.rows, key=lambda r: r["mean"])]


def compare_learners(train: Dataset, test: Dataset, specs, seed: int = 0,
                     labels: list[str] | None = None) -> LearnerRanking:
    """Train each spec per target on the training set and tabulate test
    relative RMSE per target plus the mean over targets."""
    from .learners import train as train_learner

    if len(specs) < 2:
        raise ValueError("need at least 2 specs to compare")
    labels = labels or [f"{s.kind}#{i}" for i, s in enumerate(specs)]
    Xtr = train.feature_matrix()
    Xte = test.feature_matrix()
    result = LearnerRanking()
    for label, spec in zip(labels, specs):
        row: dict = {"learner": label}
        vals = []
        for target in TARGETS:
            model = train_learner(spec, Xtr, train.target_vector(target), seed=seed)
            pred = model.predict(Xte)
            rmse, _ = relative_rmse_excluding_zeros(pred, test.target_vector(target))
            row[target] = rmse
            vals.append(rmse)
        row["mean"] = float(np.nanmean(vals))
        result.rows.append(row)
    return result
