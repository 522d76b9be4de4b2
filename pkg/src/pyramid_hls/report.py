"""Canonical HLS synthesis-report format: parsing and rendering.

The on-disk format is line-oriented UTF-8. Sections start with a
``== <SectionName>`` header; data rows are pipe-delimited with a column
header row first; ``#`` begins a comment line. The six mandatory sections
are Performance, Utilization, Operations, Memory, Multiplexer and Device.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import MalformedRow, MissingSection, RangeViolation

log = logging.getLogger(__name__)

OP_KINDS = ("add", "sub", "mul", "div", "cmp", "logic", "shift")
RESOURCES = ("LUT", "FF", "DSP", "BRAM")

MANDATORY_SECTIONS = (
    "Performance",
    "Utilization",
    "Operations",
    "Memory",
    "Multiplexer",
    "Device",
)


@dataclass(frozen=True)
class OpStat:
    op_kind: str
    bitwidth: int
    count: int


@dataclass(frozen=True)
class Utilization:
    used: int
    available: int


@dataclass(frozen=True)
class HlsReport:
    target_clock_period: float        # ns
    estimated_clock_period: float     # ns
    clock_uncertainty: float          # ns
    utilization: dict[str, Utilization]   # keyed by RESOURCES
    op_stats: tuple[OpStat, ...]
    memory_words: int
    memory_bits: int
    mux_inputs: int
    mux_bitwidth: int
    device_id: str

    def validate(self) -> None:
        if self.target_clock_period <= 0:
            raise RangeViolation("target_clock_period", self.target_clock_period)
        if self.estimated_clock_period <= 0:
            raise RangeViolation("estimated_clock_period", self.estimated_clock_period)
        if self.clock_uncertainty < 0:
            raise RangeViolation("clock_uncertainty", self.clock_uncertainty)
        for name, u in self.utilization.items():
            if u.used < 0:
                raise RangeViolation(f"{name}.used", u.used)
            if u.available < 0:
                raise RangeViolation(f"{name}.available", u.available)
            if u.used > u.available:
                raise RangeViolation(f"{name}.used", u.used)
        for op in self.op_stats:
            if op.op_kind not in OP_KINDS:
                raise RangeViolation("op_kind", op.op_kind)
            if op.bitwidth < 0:
                raise RangeViolation(f"op.{op.op_kind}.bitwidth", op.bitwidth)
            if op.count < 0:
                raise RangeViolation(f"op.{op.op_kind}.count", op.count)
        for fname in ("memory_words", "memory_bits", "mux_inputs", "mux_bitwidth"):
            if getattr(self, fname) < 0:
                raise RangeViolation(fname, getattr(self, fname))


def _split_row(line: str) -> list[str]:
    return [cell.strip() for cell in line.split("|")]


def _parse_number(token: str, line_no: int, integer: bool = False):
    try:
        return int(token) if integer else float(token)
    except ValueError:
        raise MalformedRow(line_no, f"expected a number, got {token!r}") from None


def _collect_sections(text: str) -> dict[str, list[tuple[int, str]]]:
    """Group non-comment lines by section, keeping 1-based line numbers."""
    sections: dict[str, list[tuple[int, str]]] = {}
    current: list[tuple[int, str]] | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("=="):
            name = line[2:].strip()
            if not name:
                raise MalformedRow(line_no, "empty section header")
            current = sections.setdefault(name, [])
        elif current is None:
            raise MalformedRow(line_no, "data row before any section header")
        else:
            current.append((line_no, line))
    return sections


def parse_report(text: str) -> HlsReport:
    """Parse canonical report text into a validated :class:`HlsReport`."""
    sections = _collect_sections(text)
    for name in MANDATORY_SECTIONS:
        if name not in sections:
            raise MissingSection(name)

    # Performance: header row then name|value rows
    perf: dict[str, float] = {}
    for line_no, line in sections["Performance"][1:]:
        cells = _split_row(line)
        if len(cells) != 2:
            raise MalformedRow(line_no, "Performance rows need 2 columns")
        perf[cells[0]] = _parse_number(cells[1], line_no)
    for key in ("target_period", "estimated_period", "uncertainty"):
        if key not in perf:
            raise MissingSection(f"Performance/{key}")

    util: dict[str, Utilization] = {}
    for line_no, line in sections["Utilization"][1:]:
        cells = _split_row(line)
        if len(cells) != 3:
            raise MalformedRow(line_no, "Utilization rows need 3 columns")
        name = cells[0]
        if name not in RESOURCES:
            raise MalformedRow(line_no, f"unknown resource {name!r}")
        util[name] = Utilization(
            used=_parse_number(cells[1], line_no, integer=True),
            available=_parse_number(cells[2], line_no, integer=True),
        )
    for name in RESOURCES:
        if name not in util:
            log.warning("Utilization row for %s missing; defaulting to 0/0", name)
            util[name] = Utilization(0, 0)

    ops: list[OpStat] = []
    for line_no, line in sections["Operations"][1:]:
        cells = _split_row(line)
        if len(cells) != 3:
            raise MalformedRow(line_no, "Operations rows need 3 columns")
        kind = cells[0]
        if kind not in OP_KINDS:
            raise MalformedRow(line_no, f"unknown op kind {kind!r}")
        ops.append(OpStat(
            op_kind=kind,
            bitwidth=_parse_number(cells[1], line_no, integer=True),
            count=_parse_number(cells[2], line_no, integer=True),
        ))

    def single_row(section: str, n_cols: int) -> tuple[list[int], int]:
        rows = sections[section][1:]
        if not rows:
            log.warning("%s section has no data row; defaulting to zeros", section)
            return [0] * n_cols, -1
        line_no, line = rows[0]
        cells = _split_row(line)
        if len(cells) != n_cols:
            raise MalformedRow(line_no, f"{section} row needs {n_cols} columns")
        return [_parse_number(c, line_no, integer=True) for c in cells], line_no

    (mem_words, mem_bits), _ = single_row("Memory", 2)
    (mux_inputs, mux_bitwidth), _ = single_row("Multiplexer", 2)

    device_rows = sections["Device"][1:]
    if not device_rows:
        raise MissingSection("Device/id")
    device_id = device_rows[0][1].strip()

    report = HlsReport(
        target_clock_period=perf["target_period"],
        estimated_clock_period=perf["estimated_period"],
        clock_uncertainty=perf["uncertainty"],
        utilization=util,
        op_stats=tuple(ops),
        memory_words=mem_words,
        memory_bits=mem_bits,
        mux_inputs=mux_inputs,
        mux_bitwidth=mux_bitwidth,
        device_id=device_id,
    )
    report.validate()
    return report


def render_report(report: HlsReport, comment: str | None = None) -> str:
    """Render a report back to the canonical text format (inverse of parse)."""
    lines: list[str] = []
    if comment:
        lines.append(f"# {comment}")
    lines.append("== Performance")
    lines.append("metric | value_ns")
    lines.append(f"target_period | {report.target_clock_period:.4f}")
    lines.append(f"estimated_period | {report.estimated_clock_period:.4f}")
    lines.append(f"uncertainty | {report.clock_uncertainty:.4f}")
    lines.append("== Utilization")
    lines.append("resource | used | available")
    for name in RESOURCES:
        u = report.utilization[name]
        lines.append(f"{name} | {u.used} | {u.available}")
    lines.append("== Operations")
    lines.append("op | bitwidth | count")
    for op in report.op_stats:
        lines.append(f"{op.op_kind} | {op.bitwidth} | {op.count}")
    lines.append("== Memory")
    lines.append("words | bits")
    lines.append(f"{report.memory_words} | {report.memory_bits}")
    lines.append("== Multiplexer")
    lines.append("inputs | bitwidth")
    lines.append(f"{report.mux_inputs} | {report.mux_bitwidth}")
    lines.append("== Device")
    lines.append("id")
    lines.append(report.device_id)
    return "\n".join(lines) + "\n"
