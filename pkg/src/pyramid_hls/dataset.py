"""Tabular sample store with deterministic split / k-fold / bootstrap.

All randomized operations take one explicit 64-bit seed and use numpy's
PCG64 generator, the single deterministic RNG used repo-wide, so fixtures
are portable across machines.

On-disk schema (UTF-8 CSV, ``.`` decimal):
``f_000..f_NNN,lut,ff,dsp,bram,fmax,goal,device,period_ns``.
Per-sample metadata that is not part of that schema (benchmark category,
design id) travels in an optional ``<name>.meta.csv`` sidecar.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, EmptyTestSplit, InvalidK

TARGETS = ("lut", "ff", "dsp", "bram", "fmax")
GOALS = ("TP", "TPA")


def rng_from_seed(seed: int) -> np.random.Generator:
    """The repo-wide deterministic generator (PCG64)."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    targets: dict[str, float]              # keyed by TARGETS
    goal: str                              # TP | TPA
    device_id: str
    requested_period: float                # ns
    category: str | None = None            # optional benchmark category
    design_id: str | None = None

    def __post_init__(self):
        if self.goal not in GOALS:
            raise ValueError(f"goal must be one of {GOALS}, got {self.goal!r}")
        for name in TARGETS:
            if self.targets[name] < 0:
                raise ValueError(f"target {name} must be >= 0")
        if self.targets["fmax"] <= 0:
            raise ValueError("fmax must be > 0")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    feature_space_id: str

    def __len__(self) -> int:
        return len(self.samples)

    def feature_matrix(self) -> np.ndarray:
        return np.array([s.features for s in self.samples], dtype=float)

    def target_vector(self, target: str) -> np.ndarray:
        return np.array([s.targets[target] for s in self.samples], dtype=float)

    def subset(self, indices) -> "Dataset":
        return Dataset(
            samples=tuple(self.samples[int(i)] for i in indices),
            feature_space_id=self.feature_space_id,
        )

    def filter_goal(self, goal: str) -> "Dataset":
        return Dataset(
            samples=tuple(s for s in self.samples if s.goal == goal),
            feature_space_id=self.feature_space_id,
        )

    def with_features(self, matrix: np.ndarray, feature_space_id: str) -> "Dataset":
        if len(matrix) != len(self.samples):
            raise ValueError("row count mismatch")
        return Dataset(
            samples=tuple(
                replace(s, features=np.asarray(row, dtype=float))
                for s, row in zip(self.samples, matrix)
            ),
            feature_space_id=feature_space_id,
        )


def split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint train/test partition with |test| = round(test_fraction * N)."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    n = len(ds)
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")
    n_test = round(test_fraction * n)
    if n_test == 0:
        raise EmptyTestSplit(f"test_fraction {test_fraction} rounds to 0 of {n}")
    perm = rng_from_seed(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return ds.subset(train_idx), ds.subset(test_idx)


def kfold(ds: Dataset, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled k-fold partition; returns (train_idx, val_idx) pairs."""
    n = len(ds)
    if k < 2:
        raise InvalidK("k must be >= 2")
    if n < k:
        raise InvalidK(f"need at least k={k} samples, have {n}")
    perm = rng_from_seed(seed).permutation(n)
    folds = np.array_split(perm, k)
    pairs = []
    for i in range(k):
        val = np.sort(folds[i])
        train = np.sort(np.concatenate([folds[j] for j in range(k) if j != i]))
        pairs.append((train, val))
    return pairs


def bootstrap(ds: Dataset, fraction: float, seed: int) -> Dataset:
    """With-replacement subsample of size ceil(fraction * N)."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    n = len(ds)
    if n == 0:
        raise EmptyDataset("cannot bootstrap an empty dataset")
    size = int(np.ceil(fraction * n))
    idx = rng_from_seed(seed).integers(0, n, size=size)
    return ds.subset(idx)


# --- persistence ------------------------------------------------------------

def save_dataset(ds: Dataset, path, write_meta: bool = True) -> None:
    path = Path(path)
    n_feat = len(ds.samples[0].features) if ds.samples else 0
    header = [f"f_{i:03d}" for i in range(n_feat)] + list(TARGETS) + [
        "goal", "device", "period_ns",
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in ds.samples:
            row = [repr(float(v)) for v in s.features]
            row += [repr(float(s.targets[t])) for t in TARGETS]
            row += [s.goal, s.device_id, repr(float(s.requested_period))]
            writer.writerow(row)
    if write_meta and any(s.category or s.design_id for s in ds.samples):
        meta_path = path.with_suffix(path.suffix + ".meta.csv")
        with open(meta_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "category", "design_id"])
            for i, s in enumerate(ds.samples):
                writer.writerow([i, s.category or "", s.design_id or ""])


def load_dataset(path, feature_space_id: str | None = None) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        feat_cols = [c for c in header if c.startswith("f_")]
        n_feat = len(feat_cols)
        rows = list(reader)
    if not rows:
        raise EmptyDataset(f"no samples in {path}")

    meta: dict[int, tuple[str | None, str | None]] = {}
    meta_path = path.with_suffix(path.suffix + ".meta.csv")
    if meta_path.exists():
        with open(meta_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                meta[int(row["index"])] = (row["category"] or None, row["design_id"] or None)

    samples = []
    for i, row in enumerate(rows):
        features = np.array([float(v) for v in row[:n_feat]])
        targets = {t: float(row[n_feat + j]) for j, t in enumerate(TARGETS)}
        goal, device, period = row[n_feat + 5], row[n_feat + 6], float(row[n_feat + 7])
        category, design_id = meta.get(i, (None, None))
        samples.append(Sample(
            features=features, targets=targets, goal=goal, device_id=device,
            requested_period=period, category=category, design_id=design_id,
        ))
    return Dataset(
        samples=tuple(samples),
        feature_space_id=feature_space_id or path.stem,
    )
