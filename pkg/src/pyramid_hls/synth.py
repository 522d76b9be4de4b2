"""Deterministic synthetic ground truth: designs, reports, and targets.

Stands in for a months-long CAD data collection: a hidden nonlinear
function maps canonical-report quantities to post-implementation targets
(LUT/FF/DSP/BRAM/Fmax) with device effects, goal effects, and controllable
relative noise. The functional form (polynomial plus saturating
interaction terms) is this artifact's own construction: it is a test
oracle with the right structural properties (synthesis-stage estimates
systematically undershoot the implemented area; frequency falls with
estimated period, design size, and device class), not a model of real
FPGA behavior.

Design archetypes rotate through four benchmark categories (ml,
image_video, cryptography, mathematical) with distinct coefficient
regimes, so per-category evaluation is non-degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, Sample, rng_from_seed
from .errors import InvalidParams
from .manifest import FeatureManifest, default_manifest, flatten, report_scalars
from .report import HlsReport, OpStat, Utilization, parse_report, render_report

CATEGORIES = ("ml", "image_video", "cryptography", "mathematical")


@dataclass(frozen=True)
class DeviceProfile:
    device_id: str
    availability: dict        # resource -> count
    speed: float              # relative fabric speed


@dataclass(frozen=True)
class OracleSpec:
    devices: tuple[DeviceProfile, ...] = (
        DeviceProfile("xa7-low", {"LUT": 63400, "FF": 126800, "DSP": 240, "BRAM": 135}, 1.00),
        DeviceProfile("xk7-mid", {"LUT": 260600, "FF": 521200, "DSP": 1680, "BRAM": 835}, 1.15),
        DeviceProfile("xv7-high", {"LUT": 612000, "FF": 1224000, "DSP": 3600, "BRAM": 1500}, 1.30),
    )
    clock_grid: tuple[float, ...] = (1.0, 2.0, 4.0, 5.0, 10.0)
    noise_level: float = 0.05          # relative std on every target
    tpa_area_factor: float = 0.88      # TPA runs trade frequency for area
    tpa_fmax_factor: float = 0.94
    hidden_seed: int = 7_021_971       # seeds the hidden coefficients

    def __post_init__(self):
        if self.noise_level < 0:
            raise InvalidParams("noise level must be >= 0")
        for res in ("LUT", "FF", "DSP", "BRAM"):
            avails = [d.availability[res] for d in self.devices]
            if any(a <= 0 for a in avails) or sorted(avails) != avails:
                raise InvalidParams(f"device availabilities must be positive and ordered ({res})")


# per-category regime: (area_bias, nonlin_gain, dsp_affinity, mem_affinity, speed_penalty)
_CATEGORY_REGIME = {
    "ml":           (1.65, 0.80, 1.8, 0.9, 1.16),
    "image_video":  (1.30, 0.45, 1.2, 1.6, 1.04),
    "cryptography": (1.95, 1.05, 0.3, 0.7, 1.28),
    "mathematical": (1.05, 0.20, 1.0, 0.8, 0.96),
}

_OP_MIX = {
    # relative op-kind weights: add, sub, mul, div, cmp, logic, shift
    "ml":           (1.0, 0.4, 1.6, 0.10, 0.5, 0.6, 0.4),
    "image_video":  (1.0, 0.6, 1.0, 0.05, 0.8, 0.9, 0.7),
    "cryptography": (0.7, 0.3, 0.2, 0.02, 0.6, 2.2, 1.8),
    "mathematical": (1.2, 0.9, 0.8, 0.40, 0.7, 0.5, 0.3),
}

_OP_KINDS = ("add", "sub", "mul", "div", "cmp", "logic", "shift")


def _make_design(rng: np.random.Generator, category: str) -> dict:
    """Device-independent description of one synthetic design."""
    mix = _OP_MIX[category]
    size = float(np.exp(rng.uniform(np.log(80), np.log(320))))
    ops = []
    for kind, w in zip(_OP_KINDS, mix):
        count = int(round(size * w * rng.uniform(0.6, 1.4)))
        if count <= 0:
            continue
        bitwidth = int(rng.choice([8, 16, 24, 32, 48, 64]))
        ops.append(OpStat(kind, bitwidth, count))
    bw_weight = sum(o.bitwidth * o.count for o in ops)

    mem_words = int(round(size * rng.uniform(2, 40)))
    mem_bits = mem_words * int(rng.choice([8, 16, 32, 64]))
    mux_inputs = int(round(size * rng.uniform(0.2, 1.5))) + 2
    mux_bitwidth = int(rng.choice([8, 16, 32]))

    # synthesis-stage resource estimates
    lut_est = int(round(8.0 * bw_weight ** 0.85 / 40 + 6 * mux_inputs + rng.uniform(100, 400)))
    ff_est = int(round(lut_est * rng.uniform(1.1, 1.9)))
    mul_bw = sum(o.bitwidth * o.count for o in ops if o.op_kind in ("mul", "div"))
    dsp_est = int(round(mul_bw / 340 * rng.uniform(0.7, 1.2)))
    bram_est = max(1, int(round(mem_bits / 18432 * rng.uniform(0.8, 1.3))))
    return {
        "category": category,
        "ops": tuple(ops),
        "mem_words": mem_words,
        "mem_bits": mem_bits,
        "mux_inputs": mux_inputs,
        "mux_bitwidth": mux_bitwidth,
        "lut_est": lut_est,
        "ff_est": ff_est,
        "dsp_est": dsp_est,
        "bram_est": bram_est,
        "period_slip": float(rng.uniform(0.65, 0.95)),
    }


def _make_report(design: dict, period: float, device: DeviceProfile) -> HlsReport:
    ecp = max(0.5, period * design["period_slip"])
    avail = device.availability
    util = {
        "LUT": Utilization(min(design["lut_est"], avail["LUT"]), avail["LUT"]),
        "FF": Utilization(min(design["ff_est"], avail["FF"]), avail["FF"]),
        "DSP": Utilization(min(design["dsp_est"], avail["DSP"]), avail["DSP"]),
        "BRAM": Utilization(min(design["bram_est"], avail["BRAM"]), avail["BRAM"]),
    }
    return HlsReport(
        target_clock_period=period,
        estimated_clock_period=ecp,
        clock_uncertainty=round(0.125 * period, 4),
        utilization=util,
        op_stats=design["ops"],
        memory_words=design["mem_words"],
        memory_bits=design["mem_bits"],
        mux_inputs=design["mux_inputs"],
        mux_bitwidth=design["mux_bitwidth"],
        device_id=device.device_id,
    )


def hidden_targets(report: HlsReport, category: str, goal: str, device: DeviceProfile,
                   spec: OracleSpec, noise_rng: np.random.Generator | None) -> dict:
    """The hidden nonlinear post-implementation function, pre-noise unless a
    noise generator is supplied."""
    area_bias, nonlin_gain, dsp_aff, mem_aff, speed_penalty = _CATEGORY_REGIME[category]
    s = report_scalars(report)

    bw_weight = sum(s[f"op_{k}_bw_sum"] for k in _OP_KINDS)
    complexity = np.tanh(bw_weight / 25000.0)
    pressure = s["lut_used"] / s["lut_avail"]          # device-relative crowding
    period = s["target_period"]
    ecp = s["estimated_period"]

    # retiming ripple: congestion response to synthesis-stage slack is wavy
    # in the slip ratio, roughly linear learners cannot track it
    slip = ecp / period
    ripple = np.sin(2.0 * np.pi * (slip - 0.65) / 0.20)

    lut_core = 0.55 * s["lut_used"] + 0.22 * s["ff_used"] + 0.012 * bw_weight \
        + 4.0 * s["mux_inputs"]
    lut = lut_core * (area_bias + nonlin_gain * complexity
                      + 0.9 * pressure + 2.2 / (period + 0.8)) \
        * (1.0 + 0.13 * ripple)
    ff_core = 0.65 * s["ff_used"] + 0.30 * s["lut_used"] + 0.010 * bw_weight
    ff = ff_core * (1.12 + 0.5 * nonlin_gain * complexity + 1.1 / (period + 1.2)) \
        * (1.0 + 0.13 * ripple)
    dsp = ((0.55 * s["dsp_used"] + 28.0) * (1.0 + 0.5 * dsp_aff * complexity)
           + dsp_aff * (s["op_mul_count"] + 4 * s["op_div_count"]) / (22.0 + 6.0 * period)) \
        * (1.0 + 0.11 * ripple)
    bram = ((0.65 * s["bram_used"] + 18.0) * (1.0 + 0.3 * mem_aff * complexity)
            + mem_aff * s["mem_bits"] / 40000.0) * (1.0 + 0.11 * ripple)

    size_drag = np.log1p(lut / 1500.0)
    fmax = 1000.0 * device.speed / (
        speed_penalty * (0.55 * ecp + 0.45 * np.sqrt(ecp) + 0.9)
        + 0.55 * size_drag + 2.8 * pressure + 0.25 * complexity * size_drag
    ) * (1.0 - 0.10 * ripple)

    targets = {"lut": lut, "ff": ff, "dsp": dsp, "bram": bram, "fmax": fmax}
    if goal == "TPA":
        for key in ("lut", "ff", "dsp", "bram"):
            targets[key] *= spec.tpa_area_factor
        targets["fmax"] *= spec.tpa_fmax_factor
    if noise_rng is not None and spec.noise_level > 0:
        for key in targets:
            targets[key] *= 1.0 + spec.noise_level * noise_rng.standard_normal()
    targets = {k: float(max(v, 0.5)) for k, v in targets.items()}
    return targets


def gen_dataset(spec: OracleSpec, n_designs: int, seed: int,
                out_dir: str | Path | None = None,
                manifest: FeatureManifest | None = None) -> Dataset:
    """Full grid: n_designs x clock_grid x devices x {TP, TPA} samples.

    When ``out_dir`` is given, one canonical report file per
    (design, clock, device) is written under ``out_dir/reports`` and the
    dataset CSV schema can be produced with :func:`~pyramid_hls.dataset.save_dataset`.
    Feature vectors are computed by re-parsing the rendered report text, so
    the generator/parser round trip is exact by construction.
    """
    if n_designs < 1:
        raise InvalidParams("n_designs must be >= 1")
    manifest = manifest or default_manifest()
    master = rng_from_seed(seed)
    noise_rng = rng_from_seed(int(master.integers(0, 2 ** 63)))

    report_dir = None
    if out_dir is not None:
        report_dir = Path(out_dir) / "reports"
        report_dir.mkdir(parents=True, exist_ok=True)

    samples = []
    for d in range(n_designs):
        design_rng = rng_from_seed(int(master.integers(0, 2 ** 63)))
        category = CATEGORIES[d % len(CATEGORIES)]
        design = _make_design(design_rng, category)
        design_id = f"design_{d:03d}"
        for period in spec.clock_grid:
            for device in spec.devices:
                text = render_report(
                    _make_report(design, period, device),
                    comment=f"{design_id} category={category}",
                )
                report = parse_report(text)
                if report_dir is not None:
                    name = f"{design_id}_p{period:g}ns_{device.device_id}.rpt"
                    (report_dir / name).write_text(text, encoding="utf-8")
                features = flatten(report, manifest).values
                for goal in ("TP", "TPA"):
                    targets = hidden_targets(report, category, goal, device, spec, noise_rng)
                    samples.append(Sample(
                        features=features,
                        targets=targets,
                        goal=goal,
                        device_id=device.device_id,
                        requested_period=period,
                        category=category,
                        design_id=design_id,
                    ))
    return Dataset(samples=tuple(samples), feature_space_id=manifest.manifest_id)
