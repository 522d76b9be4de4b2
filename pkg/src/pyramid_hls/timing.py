"""Simulated CAD timing oracle and maximum-frequency search algorithms.

A landscape stores, per optimization strategy, the worst negative slack
(WNS, ns) on a uniform requested-frequency grid plus that strategy's LUT
cost. A requested frequency "passes" exactly when WNS >= 0. On top of the
oracle live four search procedures: the closed-form reference frequency
from WNS, bisection on the pass predicate, exhaustive window scanning, and
the two-phase heuristic search over all strategies targeting either raw
throughput (TP) or throughput-to-area (TPA).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import rng_from_seed
from .errors import AllStrategiesFail, InvalidParams, NoPassingPoint, NonPositivePeriod

DEFAULT_SCAN_RADIUS = 64.0   # MHz
DEFAULT_PRECISION = 1.0      # MHz


@dataclass(frozen=True)
class StrategyProfile:
    wns: np.ndarray          # ns, one entry per grid frequency
    lut_count: int

    def __post_init__(self):
        if self.lut_count <= 0:
            raise InvalidParams("lut_count must be > 0")


@dataclass(frozen=True)
class WnsLandscape:
    freq_lo: float           # MHz
    freq_hi: float           # MHz
    precision: float         # MHz grid step
    strategies: tuple[StrategyProfile, ...]
    seed: int | None = None
    params: dict | None = None

    def __post_init__(self):
        n = self.grid_size
        for s in self.strategies:
            if len(s.wns) != n:
                raise InvalidParams("strategy table does not match frequency grid")

    @property
    def grid_size(self) -> int:
        return int(round((self.freq_hi - self.freq_lo) / self.precision)) + 1

    def grid(self) -> np.ndarray:
        return self.freq_lo + self.precision * np.arange(self.grid_size)

    def _index(self, f: float) -> int:
        idx = round((f - self.freq_lo) / self.precision)
        if idx < 0 or idx >= self.grid_size:
            raise InvalidParams(
                f"frequency {f} MHz outside landscape range "
                f"[{self.freq_lo}, {self.freq_hi}]"
            )
        return int(idx)

    def snap(self, f: float) -> float:
        return self.freq_lo + self.precision * self._index(f)

    def wns_at(self, strategy: int, f: float) -> float:
        return float(self.strategies[strategy].wns[self._index(f)])

    def passes(self, strategy: int, f: float) -> bool:
        return self.wns_at(strategy, f) >= 0.0


@dataclass(frozen=True)
class SearchResult:
    achieved_fmax: float     # MHz
    strategy_id: int
    lut_count: int
    goal: str                # TP | TPA
    score: float             # MHz for TP, MHz per LUT for TPA
    probes: int


def reference_frequency(target_period: float, wns: float) -> float:
    """Theoretically achievable frequency from a single timing run:
    minimum period = target period - WNS, returned as MHz."""
    if target_period <= 0:
        raise NonPositivePeriod(f"target period must be > 0, got {target_period}")
    min_period = target_period - wns
    if min_period <= 0:
        raise NonPositivePeriod(
            f"target period {target_period} ns minus WNS {wns} ns is not positive"
        )
    return 1000.0 / min_period


def _binary_search_detail(landscape: WnsLandscape, strategy: int,
                          lo: float, hi: float, precision: float):
    """Bisection on the pass predicate. Returns (best_f, best_wns, probes)."""
    if lo >= hi:
        raise InvalidParams("need lo < hi")
    lo = landscape.snap(lo)
    hi = landscape.snap(hi)
    probes = 0

    def passes(f):
        nonlocal probes
        probes += 1
        return landscape.wns_at(strategy, f) >= 0.0

    if not passes(lo):
        raise NoPassingPoint(f"strategy {strategy}: low bound {lo} MHz already fails")
    best = lo
    if passes(hi):
        best = hi
        lo = hi
    while hi - lo > precision:
        mid = landscape.snap(lo + (hi - lo) / 2.0)
        if mid in (lo, hi):
            break
        if passes(mid):
            lo = mid
            best = max(best, mid)
        else:
            hi = mid
    return best, landscape.wns_at(strategy, best), probes


def binary_search_fmax(landscape: WnsLandscape, strategy: int, lo: float,
                       hi: float, precision: float = DEFAULT_PRECISION) -> float:
    """Highest passing frequency found by bisection (not necessarily the
    true maximum when the landscape fluctuates)."""
    best, _, _ = _binary_search_detail(landscape, strategy, lo, hi, precision)
    return best


def probe_budget(lo: float, hi: float, precision: float) -> int:
    """Upper bound on bisection probes."""
    return math.ceil(math.log2((hi - lo) / precision)) + 2


def _scan_detail(landscape: WnsLandscape, strategy: int, center: float,
                 radius: float, precision: float):
    grid = landscape.grid()
    lo = max(center - radius, landscape.freq_lo)
    hi = min(center + radius, landscape.freq_hi)
    mask = (grid >= lo - 1e-9) & (grid <= hi + 1e-9)
    if not mask.any():
        raise InvalidParams("scan window does not intersect the landscape range")
    step = max(1, int(round(precision / landscape.precision)))
    idx = np.nonzero(mask)[0][::step]
    wns = landscape.strategies[strategy].wns[idx]
    passing = idx[wns >= 0.0]
    probes = len(idx)
    if len(passing) == 0:
        raise NoPassingPoint(
            f"strategy {strategy}: no passing frequency in [{lo}, {hi}] MHz"
        )
    return float(grid[passing.max()]), probes


def exhaustive_scan(landscape: WnsLandscape, strategy: int, center: float,
                    radius: float = DEFAULT_SCAN_RADIUS,
                    precision: float = DEFAULT_PRECISION) -> float:
    """Maximum passing frequency in the window [center-radius, center+radius]."""
    best, _ = _scan_detail(landscape, strategy, center, radius, precision)
    return best


def scan_table(landscape: WnsLandscape, strategy: int, center: float,
               radius: float = DEFAULT_SCAN_RADIUS,
               precision: float = DEFAULT_PRECISION) -> list[tuple[float, float, bool]]:
    """(frequency, wns, pass) rows over the scan window, for plotting."""
    grid = landscape.grid()
    lo = max(center - radius, landscape.freq_lo)
    hi = min(center + radius, landscape.freq_hi)
    mask = (grid >= lo - 1e-9) & (grid <= hi + 1e-9)
    step = max(1, int(round(precision / landscape.precision)))
    idx = np.nonzero(mask)[0][::step]
    wns = landscape.strategies[strategy].wns[idx]
    return [(float(grid[i]), float(w), bool(w >= 0.0)) for i, w in zip(idx, wns)]


def minerva_search(landscape: WnsLandscape, goal: str,
                   scan_radius: float = DEFAULT_SCAN_RADIUS,
                   precision: float = DEFAULT_PRECISION) -> SearchResult:
    """Two-phase heuristic per strategy: bisect over the full range, convert
    the best probe's WNS to a reference frequency, then scan a window around
    the reference. Returns the argmax strategy under the goal's score
    (TP = fmax, TPA = fmax / LUTs); ties break to the lowest strategy index.
    """
    if goal not in ("TP", "TPA"):
        raise InvalidParams(f"goal must be TP or TPA, got {goal!r}")
    best_result: SearchResult | None = None
    total_probes = 0
    for sid, profile in enumerate(landscape.strategies):
        try:
            f_probe, wns_probe, probes = _binary_search_detail(
                landscape, sid, landscape.freq_lo, landscape.freq_hi, precision
            )
            total_probes += probes
            reference = reference_frequency(1000.0 / f_probe, wns_probe)
            reference = min(max(reference, landscape.freq_lo), landscape.freq_hi)
            fmax, scan_probes = _scan_detail(landscape, sid, reference,
                                             scan_radius, precision)
            total_probes += scan_probes
        except NoPassingPoint:
            continue
        score = fmax if goal == "TP" else fmax / profile.lut_count
        if best_result is None or score > best_result.score:
            best_result = SearchResult(
                achieved_fmax=fmax, strategy_id=sid, lut_count=profile.lut_count,
                goal=goal, score=score, probes=0,
            )
    if best_result is None:
        raise AllStrategiesFail("no strategy reaches timing closure anywhere")
    return SearchResult(
        achieved_fmax=best_result.achieved_fmax,
        strategy_id=best_result.strategy_id,
        lut_count=best_result.lut_count,
        goal=best_result.goal,
        score=best_result.score,
        probes=total_probes,
    )


def brute_force_search(landscape: WnsLandscape, goal: str) -> SearchResult:
    """Full-grid oracle: scans every grid point of every strategy."""
    if goal not in ("TP", "TPA"):
        raise InvalidParams(f"goal must be TP or TPA, got {goal!r}")
    grid = landscape.grid()
    best: SearchResult | None = None
    probes = 0
    for sid, profile in enumerate(landscape.strategies):
        probes += len(grid)
        passing = grid[profile.wns >= 0.0]
        if len(passing) == 0:
            continue
        fmax = float(passing.max())
        score = fmax if goal == "TP" else fmax / profile.lut_count
        if best is None or score > best.score:
            best = SearchResult(
                achieved_fmax=fmax, strategy_id=sid, lut_count=profile.lut_count,
                goal=goal, score=score, probes=0,
            )
    if best is None:
        raise AllStrategiesFail("no strategy reaches timing closure anywhere")
    return SearchResult(
        achieved_fmax=best.achieved_fmax, strategy_id=best.strategy_id,
        lut_count=best.lut_count, goal=best.goal, score=best.score, probes=probes,
    )


# --- synthetic landscape generation ----------------------------------------

@dataclass(frozen=True)
class LandscapeParams:
    freq_lo: float = 100.0
    freq_hi: float = 612.0
    precision: float = 1.0
    crossover_lo: float = 250.0       # base achievable-frequency range
    crossover_hi: float = 450.0
    fluctuation_amplitude: float = 0.05    # ns bound on the noise term
    n_strategies: int = 25
    strategy_speed_range: tuple[float, float] = (0.92, 1.08)
    strategy_lut_range: tuple[float, float] = (0.85, 1.25)
    base_luts: int = 5000

    def __post_init__(self):
        if self.fluctuation_amplitude < 0:
            raise InvalidParams("fluctuation amplitude must be >= 0")
        if self.freq_lo >= self.freq_hi or self.precision <= 0:
            raise InvalidParams("need freq_lo < freq_hi and precision > 0")
        if self.n_strategies < 1:
            raise InvalidParams("need at least one strategy")


def gen_landscape(params: LandscapeParams, seed: int) -> WnsLandscape:
    """Deterministic landscape: per strategy, WNS(f) is a monotone decreasing
    period-slack trend around a strategy-specific crossover frequency plus a
    seeded, amplitude-bounded sum of sinusoids."""
    rng = rng_from_seed(seed)
    n = int(round((params.freq_hi - params.freq_lo) / params.precision)) + 1
    grid = params.freq_lo + params.precision * np.arange(n)

    base_crossover = rng.uniform(params.crossover_lo, params.crossover_hi)
    strategies = []
    for _ in range(params.n_strategies):
        f0 = base_crossover * rng.uniform(*params.strategy_speed_range)
        luts = max(1, int(round(params.base_luts * rng.uniform(*params.strategy_lut_range))))
        trend = 1000.0 / grid - 1000.0 / f0
        if params.fluctuation_amplitude > 0:
            amps = rng.uniform(0.3, 1.0, size=3)
            wavelengths = rng.uniform(5.0, 40.0, size=3)    # MHz
            phases = rng.uniform(0, 2 * np.pi, size=3)
            fluct = sum(
                a * np.sin(2 * np.pi * grid / wl + ph)
                for a, wl, ph in zip(amps, wavelengths, phases)
            )
            fluct = params.fluctuation_amplitude * fluct / amps.sum()
        else:
            fluct = np.zeros_like(grid)
        strategies.append(StrategyProfile(wns=trend + fluct, lut_count=luts))
    return WnsLandscape(
        freq_lo=params.freq_lo, freq_hi=params.freq_hi, precision=params.precision,
        strategies=tuple(strategies), seed=seed, params=params.__dict__.copy(),
    )


# --- persistence ------------------------------------------------------------

def landscape_to_text(landscape: WnsLandscape) -> tuple[str, str]:
    """(csv_text, json_sidecar_text): per-strategy freq/wns rows plus metadata."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["strategy", "freq_mhz", "wns_ns"])
    grid = landscape.grid()
    for sid, profile in enumerate(landscape.strategies):
        for f, w in zip(grid, profile.wns):
            writer.writerow([sid, repr(float(f)), repr(float(w))])
    sidecar = json.dumps({
        "freq_lo": landscape.freq_lo,
        "freq_hi": landscape.freq_hi,
        "precision": landscape.precision,
        "luts": [s.lut_count for s in landscape.strategies],
        "seed": landscape.seed,
        "params": landscape.params,
    }, indent=2)
    return buf.getvalue(), sidecar


def load_landscape_text(csv_text: str, json_text: str) -> WnsLandscape:
    meta = json.loads(json_text)
    per_strategy: dict[int, list[float]] = {}
    for row in csv.DictReader(io.StringIO(csv_text)):
        per_strategy.setdefault(int(row["strategy"]), []).append(float(row["wns_ns"]))
    strategies = tuple(
        StrategyProfile(wns=np.array(per_strategy[sid]), lut_count=meta["luts"][sid])
        for sid in sorted(per_strategy)
    )
    return WnsLandscape(
        freq_lo=meta["freq_lo"], freq_hi=meta["freq_hi"], precision=meta["precision"],
        strategies=strategies, seed=meta.get("seed"), params=meta.get("params"),
    )


def save_landscape(landscape: WnsLandscape, csv_path, json_path=None) -> None:
    csv_path = Path(csv_path)
    json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
    csv_text, json_text = landscape_to_text(landscape)
    csv_path.write_text(csv_text, encoding="utf-8")
    json_path.write_text(json_text, encoding="utf-8")


def load_landscape(csv_path, json_path=None) -> WnsLandscape:
    csv_path = Path(csv_path)
    json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
    return load_landscape_text(
        csv_path.read_text(encoding="utf-8"), json_path.read_text(encoding="utf-8")
    )
