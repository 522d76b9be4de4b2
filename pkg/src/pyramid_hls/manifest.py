"""Feature manifest: named derivations from a parsed report to a raw vector.

A manifest is a versioned CSV (``feature_name,source,derivation``) bundled
with the package. ``source`` names one report scalar, or two joined with
``:`` for the two-argument derivations. Supported derivations:

- ``identity``  value of the scalar
- ``log1p``     log(1 + scalar)
- ``ratio``     a / b, defined as 0 when b == 0
- ``product``   a * b

Feature names carry their category as a prefix (``perf_``, ``res_``,
``op_``, ``mem_``, ``mux_``), mirroring the five report sections. The
shipped default manifest (``manifest_v1``) defines 183 features; the
concrete feature list is this artifact's own construction.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ManifestMismatch
from .report import OP_KINDS, HlsReport

DERIVATIONS = ("identity", "log1p", "ratio", "product")

CATEGORIES = ("performance", "resources", "logic_arith", "memory", "multiplexer")

_PREFIX_TO_CATEGORY = {
    "perf": "performance",
    "res": "resources",
    "op": "logic_arith",
    "mem": "memory",
    "mux": "multiplexer",
}


@dataclass(frozen=True)
class FeatureDef:
    name: str
    source: str
    derivation: str

    @property
    def category(self) -> str:
        prefix = self.name.split("_", 1)[0]
        try:
            return _PREFIX_TO_CATEGORY[prefix]
        except KeyError:
            raise ManifestMismatch(f"feature {self.name!r} has no category prefix") from None


@dataclass(frozen=True)
class FeatureManifest:
    manifest_id: str
    features: tuple[FeatureDef, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ManifestMismatch("duplicate feature names in manifest")
        for f in self.features:
            if f.derivation not in DERIVATIONS:
                raise ManifestMismatch(f"unknown derivation {f.derivation!r}")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def categories(self) -> list[str]:
        return [f.category for f in self.features]


@dataclass(frozen=True)
class RawFeatureVector:
    values: np.ndarray
    manifest_id: str


def report_scalars(report: HlsReport) -> dict[str, float]:
    """Flatten a report into the scalar pool the manifest draws from."""
    scalars: dict[str, float] = {
        "target_period": report.target_clock_period,
        "estimated_period": report.estimated_clock_period,
        "uncertainty": report.clock_uncertainty,
        "mem_words": float(report.memory_words),
        "mem_bits": float(report.memory_bits),
        "mux_inputs": float(report.mux_inputs),
        "mux_bitwidth": float(report.mux_bitwidth),
    }
    for res in ("LUT", "FF", "DSP", "BRAM"):
        u = report.utilization[res]
        scalars[f"{res.lower()}_used"] = float(u.used)
        scalars[f"{res.lower()}_avail"] = float(u.available)
    for kind in OP_KINDS:
        rows = [op for op in report.op_stats if op.op_kind == kind]
        scalars[f"op_{kind}_count"] = float(sum(op.count for op in rows))
        scalars[f"op_{kind}_max_bw"] = float(max((op.bitwidth for op in rows), default=0))
        scalars[f"op_{kind}_bw_sum"] = float(sum(op.bitwidth * op.count for op in rows))
    return scalars


def _evaluate(feature: FeatureDef, scalars: dict[str, float]) -> float:
    parts = feature.source.split(":")
    try:
        args = [scalars[p] for p in parts]
    except KeyError as exc:
        raise ManifestMismatch(
            f"feature {feature.name!r} references unknown scalar {exc.args[0]!r}"
        ) from None
    if feature.derivation == "identity":
        return args[0]
    if feature.derivation == "log1p":
        return math.log1p(args[0])
    if feature.derivation == "ratio":
        return args[0] / args[1] if args[1] != 0 else 0.0
    if feature.derivation == "product":
        return args[0] * args[1]
    raise ManifestMismatch(f"unknown derivation {feature.derivation!r}")


def flatten(report: HlsReport, manifest: FeatureManifest) -> RawFeatureVector:
    """Deterministically map a report onto the manifest's feature order."""
    scalars = report_scalars(report)
    values = np.array([_evaluate(f, scalars) for f in manifest.features], dtype=float)
    return RawFeatureVector(values=values, manifest_id=manifest.manifest_id)


# --- persistence ------------------------------------------------------------

def load_manifest_text(text: str, manifest_id: str) -> FeatureManifest:
    reader = csv.DictReader(io.StringIO(text))
    expected = {"feature_name", "source", "derivation"}
    if set(reader.fieldnames or []) != expected:
        raise ManifestMismatch(f"manifest header must be {sorted(expected)}")
    features = tuple(
        FeatureDef(row["feature_name"], row["source"], row["derivation"]) for row in reader
    )
    return FeatureManifest(manifest_id=manifest_id, features=features)


def load_manifest(path) -> FeatureManifest:
    from pathlib import Path

    p = Path(path)
    return load_manifest_text(p.read_text(encoding="utf-8"), manifest_id=p.stem)


def save_manifest(manifest: FeatureManifest, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_name", "source", "derivation"])
        for f in manifest.features:
            writer.writerow([f.name, f.source, f.derivation])


def default_manifest() -> FeatureManifest:
    """The bundled 183-feature manifest (``manifest_v1``)."""
    text = resources.files("pyramid_hls.data").joinpath("manifest_v1.csv").read_text("utf-8")
    return load_manifest_text(text, manifest_id="manifest_v1")


# --- construction of the shipped default -----------------------------------

def build_default_rows() -> list[FeatureDef]:
    """Programmatic definition of manifest_v1 (183 features, 9/72/84/9/9 per
    category). Kept as code so the bundled CSV can be regenerated."""
    rows: list[FeatureDef] = []

    def add(name, source, derivation):
        rows.append(FeatureDef(name, source, derivation))

    # performance (9)
    add("perf_target_period", "target_period", "identity")
    add("perf_estimated_period", "estimated_period", "identity")
    add("perf_uncertainty", "uncertainty", "identity")
    add("perf_target_period_log", "target_period", "log1p")
    add("perf_estimated_period_log", "estimated_period", "log1p")
    add("perf_slack_ratio", "estimated_period:target_period", "ratio")
    add("perf_uncertainty_ratio", "uncertainty:target_period", "ratio")
    add("perf_period_product", "target_period:estimated_period", "product")
    add("perf_uncertainty_log", "uncertainty", "log1p")

    # resources (18 per resource class, 72 total)
    res_names = ("lut", "ff", "dsp", "bram")
    for r in res_names:
        add(f"res_{r}_used", f"{r}_used", "identity")
        add(f"res_{r}_avail", f"{r}_avail", "identity")
        add(f"res_{r}_util", f"{r}_used:{r}_avail", "ratio")
        add(f"res_{r}_used_log", f"{r}_used", "log1p")
        add(f"res_{r}_avail_log", f"{r}_avail", "log1p")
        add(f"res_{r}_used_x_period", f"{r}_used:target_period", "product")
        add(f"res_{r}_used_x_estperiod", f"{r}_used:estimated_period", "product")
        for other in res_names:
            if other != r:
                add(f"res_{r}_per_{other}", f"{r}_used:{other}_used", "ratio")
        add(f"res_{r}_per_memword", f"{r}_used:mem_words", "ratio")
        add(f"res_{r}_used_x_unc", f"{r}_used:uncertainty", "product")
        add(f"res_{r}_avail_x_period", f"{r}_avail:target_period", "product")
        add(f"res_{r}_per_muxinput", f"{r}_used:mux_inputs", "ratio")
        add(f"res_{r}_per_membit", f"{r}_used:mem_bits", "ratio")
        add(f"res_{r}_avail_vs_lut", f"{r}_avail:lut_avail", "ratio")
        add(f"res_{r}_used_x_addcount", f"{r}_used:op_add_count", "product")
        add(f"res_{r}_used_x_mulcount", f"{r}_used:op_mul_count", "product")

    # logic and arithmetic operations (12 per op kind, 84 total)
    for k in OP_KINDS:
        add(f"op_{k}_count", f"op_{k}_count", "identity")
        add(f"op_{k}_max_bw", f"op_{k}_max_bw", "identity")
        add(f"op_{k}_bw_sum", f"op_{k}_bw_sum", "identity")
        add(f"op_{k}_count_log", f"op_{k}_count", "log1p")
        add(f"op_{k}_bw_sum_log", f"op_{k}_bw_sum", "log1p")
        add(f"op_{k}_mean_bw", f"op_{k}_bw_sum:op_{k}_count", "ratio")
        add(f"op_{k}_count_x_period", f"op_{k}_count:target_period", "product")
        add(f"op_{k}_density", f"op_{k}_count:lut_used", "ratio")
        add(f"op_{k}_bw_per_lut", f"op_{k}_bw_sum:lut_used", "ratio")
        add(f"op_{k}_count_x_maxbw", f"op_{k}_count:op_{k}_max_bw", "product")
        add(f"op_{k}_share_vs_add", f"op_{k}_count:op_add_count", "ratio")
        add(f"op_{k}_bwsum_x_unc", f"op_{k}_bw_sum:uncertainty", "product")

    # memory (9)
    add("mem_words", "mem_words", "identity")
    add("mem_bits", "mem_bits", "identity")
    add("mem_words_log", "mem_words", "log1p")
    add("mem_bits_log", "mem_bits", "log1p")
    add("mem_bits_per_word", "mem_bits:mem_words", "ratio")
    add("mem_words_x_period", "mem_words:target_period", "product")
    add("mem_bits_per_lut", "mem_bits:lut_used", "ratio")
    add("mem_words_per_bram", "mem_words:bram_used", "ratio")
    add("mem_bits_x_unc", "mem_bits:uncertainty", "product")

    # multiplexer (9)
    add("mux_inputs", "mux_inputs", "identity")
    add("mux_bitwidth", "mux_bitwidth", "identity")
    add("mux_inputs_log", "mux_inputs", "log1p")
    add("mux_bitwidth_log", "mux_bitwidth", "log1p")
    add("mux_width_product", "mux_inputs:mux_bitwidth", "product")
    add("mux_inputs_per_lut", "mux_inputs:lut_used", "ratio")
    add("mux_inputs_x_period", "mux_inputs:target_period", "product")
    add("mux_bw_per_ff", "mux_bitwidth:ff_used", "ratio")
    add("mux_inputs_x_unc", "mux_inputs:uncertainty", "product")

    assert len(rows) == 183, len(rows)
    return rows
