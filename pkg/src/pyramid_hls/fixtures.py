"""Deterministic bundled fixtures.

- :func:`reduction_fixture` builds the 183-feature dataset the shipped
  reduction recipe is validated against. It is engineered so the default
  two-stage reduction keeps exactly 72 features with per-category counts
  3/36/29/2/2: each category block holds a run of informative "core"
  features, exact affine copies of cores (collapsed by correlation
  pruning), and independent noise columns (dropped by coefficient pruning).
- :func:`load_bundled_landscape` loads a packaged WNS landscape by name.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .dataset import Dataset, Sample, rng_from_seed

# Category block layout of manifest_v1: (start, length, n_core)
_BLOCKS = {
    "performance": (0, 9, 3),
    "resources": (9, 72, 36),
    "logic_arith": (81, 84, 29),
    "memory": (165, 9, 2),
    "multiplexer": (174, 9, 2),
}

EXPECTED_SURVIVOR_COUNTS = {
    "performance": 3,
    "resources": 36,
    "logic_arith": 29,
    "memory": 2,
    "multiplexer": 2,
}

REDUCTION_FIXTURE_SEED = 20240


def reduction_fixture(n_samples: int = 600, seed: int = REDUCTION_FIXTURE_SEED,
                      ) -> tuple[Dataset, list[int]]:
    """Build the reduction benchmark; returns (dataset, expected survivors)."""
    rng = rng_from_seed(seed)
    p = 183
    X = np.zeros((n_samples, p))
    core_indices: list[int] = []

    for start, length, n_core in _BLOCKS.values():
        cores = list(range(start, start + n_core))
        core_indices.extend(cores)
        X[:, cores] = rng.standard_normal((n_samples, n_core))

        rest = list(range(start + n_core, start + length))
        n_dup = len(rest) // 2
        for j, idx in enumerate(rest[:n_dup]):
            src = cores[j % n_core]
            scale = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
            X[:, idx] = scale * X[:, src] + rng.uniform(-3.0, 3.0)
        for idx in rest[n_dup:]:
            X[:, idx] = rng.standard_normal(n_samples)

    core_indices.sort()
    Xc = X[:, core_indices]
    samples = []
    target_names = ("lut", "ff", "dsp", "bram", "fmax")
    coefs = {
        t: rng.uniform(0.1, 0.5, size=len(core_indices)) * rng.choice([-1.0, 1.0], size=len(core_indices))
        for t in target_names
    }
    for i in range(n_samples):
        targets = {
            t: float(50.0 + Xc[i] @ coefs[t] + 0.01 * rng.standard_normal())
            for t in target_names
        }
        samples.append(Sample(
            features=X[i].copy(),
            targets=targets,
            goal="TP",
            device_id="fixture",
            requested_period=10.0,
        ))
    return Dataset(samples=tuple(samples), feature_space_id="manifest_v1"), core_indices


def load_bundled_landscape(name: str):
    """Load a landscape shipped under ``pyramid_hls/data/landscapes``."""
    from .timing import load_landscape_text

    base = resources.files("pyramid_hls.data").joinpath("landscapes")
    csv_text = base.joinpath(f"{name}.csv").read_text("utf-8")
    json_text = base.joinpath(f"{name}.json").read_text("utf-8")
    return load_landscape_text(csv_text, json_text)


def bundled_landscape_names() -> list[str]:
    base = resources.files("pyramid_hls.data").joinpath("landscapes")
    return sorted(
        entry.name[:-4] for entry in base.iterdir() if entry.name.endswith(".csv")
    )
