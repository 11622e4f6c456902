"""Threshold classification, calibration, and report rendering."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

# Defaults from the fully-diffusing reference calibration:
# warning = smallest per-bit leakage, detection = mean per-bit leakage.
DEFAULT_WARN = 2.89154e-3
DEFAULT_DETECT = 1.53939e-2


@dataclass(frozen=True)
class Thresholds:
    warn: float = DEFAULT_WARN
    detect: float = DEFAULT_DETECT

    def __post_init__(self):
        if not (0.0 <= self.warn <= self.detect):
            raise ValueError(f"thresholds must satisfy 0 <= warn <= detect, "
                             f"got warn={self.warn} detect={self.detect}")


@dataclass
class SecretEntry:
    net: str
    bit: int
    leakage_bits: float
    cls: str  # leak | warn | ok
    paths: list  # (output_net, output_bit, leakage_bits), nonzero only


@dataclass
class Report:
    design: dict  # top, max_channel_inputs, cap
    thresholds: Thresholds
    secrets: list  # SecretEntry, ordered by secret id
    runtime_seconds: float = 0.0

    def counts(self):
        c = {"leak": 0, "warn": 0, "ok": 0}
        for s in self.secrets:
            c[s.cls] += 1
        return c

    def exit_code(self):
        c = self.counts()
        if c["leak"]:
            return 2
        if c["warn"]:
            return 1
        return 0


def classify_value(total: float, t: Thresholds) -> str:
    if total > t.detect:
        return "leak"
    if total > t.warn:
        return "warn"
    return "ok"


def classify(totals, t: Thresholds, secrets, contributions=None,
             design_meta=None, runtime_seconds=0.0) -> Report:
    """Three-way partition of per-secret-bit totals.

    ``secrets`` is the engine's (sid, net, bit, p) list; ``contributions``
    the per-output-bit leakage vectors used for path reporting.
    """
    entries = []
    for sid, net, bit, _p in sorted(secrets):
        total = totals.get(sid, 0.0)
        paths = []
        if contributions:
            for out_net, out_bit, vec in contributions:
                if vec.get(sid, 0.0) > 0.0:
                    paths.append((out_net, out_bit, vec[sid]))
        entries.append(SecretEntry(net, bit, total, classify_value(total, t), paths))
    return Report(design=design_meta or {}, thresholds=t, secrets=entries,
                  runtime_seconds=runtime_seconds)


def calibrate_thresholds(totals) -> Thresholds:
    """warn = min per-bit total, detect = mean per-bit total."""
    values = list(totals.values())
    if len(values) < 2:
        raise ValueError("calibration needs a design with at least 2 secret bits")
    return Thresholds(warn=min(values), detect=math.fsum(values) / len(values))


def render(report: Report, fmt: str) -> bytes:
    if fmt == "json":
        return _render_json(report)
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "text":
        return _render_text(report)
    raise ValueError(f"unknown format {fmt!r}")


def _render_json(report: Report) -> bytes:
    doc = {
        "schema": 1,
        "design": {
            "top": report.design.get("top"),
            "max_channel_inputs": report.design.get("max_channel_inputs"),
            "cap": report.design.get("cap"),
        },
        "thresholds": {"warn": report.thresholds.warn,
                       "detect": report.thresholds.detect},
        "secrets": [
            {
                "net": s.net,
                "bit": s.bit,
                "leakage_bits": s.leakage_bits,
                "class": s.cls,
                "paths": [
                    {"output_net": n, "output_bit": b, "leakage_bits": v}
                    for n, b, v in s.paths
                ],
            }
            for s in report.secrets
        ],
        "runtime_seconds": report.runtime_seconds,
    }
    return (json.dumps(doc, indent=2) + "\n").encode()


def _render_csv(report: Report) -> bytes:
    lines = ["secret_bit_index,leakage"]
    for i, s in enumerate(report.secrets):
        lines.append(f"{i},{s.leakage_bits!r}")
    return ("\n".join(lines) + "\n").encode()


def _render_text(report: Report) -> bytes:
    lines = []
    top = report.design.get("top", "?")
    lines.append(f"design {top}  "
                 f"(max_channel_inputs={report.design.get('max_channel_inputs')}, "
                 f"cap={'on' if report.design.get('cap') else 'off'})")
    lines.append(f"thresholds: warn={report.thresholds.warn:g} "
                 f"detect={report.thresholds.detect:g}")
    lines.append(f"{'secret bit':<24}{'leakage (bit)':>16}  class")
    for s in report.secrets:
        lines.append(f"{s.net + '[' + str(s.bit) + ']':<24}"
                     f"{s.leakage_bits:>16.9f}  {s.cls}")
    c = report.counts()
    lines.append(f"summary: {c['leak']} leak, {c['warn']} warn, {c['ok']} ok "
                 f"({report.runtime_seconds:.3f}s)")
    return ("\n".join(lines) + "\n").encode()
