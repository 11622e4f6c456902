"""End-to-end analysis driver shared by the CLI, scripts, and tests."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field

from .bitgraph import bit_blast, compute_dependencies
from .channelizer import merge
from .errors import UnknownSignal
from .frontend import SourceUnit, elaborate, extract_labels, parse
from .qif_engine import accumulate_totals, output_contributions, propagate
from .report import Report, Thresholds, classify, render

_PROB_LINE = re.compile(
    r"^\s*([A-Za-z_][\w.$]*)\s*(?:\[\s*(\d+)\s*\])?\s*=\s*([0-9.eE+-]+)\s*$")


@dataclass
class Config:
    files: list  # paths
    top: str
    high_overrides: tuple = ()  # net names marked High from the CLI
    prob_file: str | None = None
    p_high: float | None = None  # single global secret-bit probability
    max_channel_inputs: int = 5
    thresholds: Thresholds = field(default_factory=Thresholds)
    cap: bool = True
    format: str = "text"
    unroll: int = 8
    seed: int = 42

    def __post_init__(self):
        if not 1 <= self.max_channel_inputs <= 16:
            raise ValueError("max_channel_inputs must be in [1, 16]")
        if self.p_high is not None and not 0.0 <= self.p_high <= 1.0:
            raise ValueError("probabilities must be in [0, 1]")


@dataclass
class Analysis:
    design: object
    forest: list
    deps: object
    graph: object
    annotated: object
    totals: dict
    report: Report


def parse_probability_file(text: str):
    """Lines `net[bit] = p` or `net = p`; returns (per_bit, per_net) maps."""
    per_bit, per_net = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        m = _PROB_LINE.match(stripped)
        if not m:
            raise ValueError(f"probability file line {lineno}: cannot parse {line!r}")
        name, bit, p = m.group(1), m.group(2), float(m.group(3))
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability file line {lineno}: {p} not in [0, 1]")
        if bit is None:
            per_net[name] = p
        else:
            per_bit[(name, int(bit))] = p
    return per_bit, per_net


def build_input_probs(design, config: Config):
    probs = {}
    if config.p_high is not None:
        for net, bit, _sid in design.high_bits():
            probs[(net, bit)] = config.p_high
    if config.prob_file:
        with open(config.prob_file, encoding="utf-8") as fh:
            per_bit, per_net = parse_probability_file(fh.read())
        for name, p in per_net.items():
            if name not in design.nets:
                raise UnknownSignal(name)
            for b in range(design.nets[name].width):
                probs[(name, b)] = p
        for (name, b), p in per_bit.items():
            if name not in design.nets:
                raise UnknownSignal(name)
            probs[(name, b)] = p
    return probs


def load_sources(paths):
    files = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            files.append((str(path), fh.read()))
    return files


def analyze(config: Config, file_texts=None) -> Analysis:
    """Run the full pipeline; ``file_texts`` bypasses the filesystem."""
    start = time.monotonic()
    files = file_texts if file_texts is not None else load_sources(config.files)
    ast = parse(SourceUnit(files, config.top))
    labels = extract_labels(ast, config.top,
                            [(n, "high") for n in config.high_overrides])
    design = elaborate(ast, config.top, labels)
    forest = bit_blast(design)
    deps = compute_dependencies(forest)
    graph = merge(forest, deps, config.max_channel_inputs)
    input_probs = build_input_probs(design, config)
    annotated = propagate(graph, design, input_probs, deps)
    totals = accumulate_totals(annotated, design, cap=config.cap)
    contributions = output_contributions(annotated, design)
    report = classify(
        totals, config.thresholds, annotated.secrets, contributions,
        design_meta={"top": config.top,
                     "max_channel_inputs": config.max_channel_inputs,
                     "cap": config.cap},
        runtime_seconds=time.monotonic() - start)
    return Analysis(design, forest, deps, graph, annotated, totals, report)


def render_report(analysis: Analysis, fmt: str) -> bytes:
    return render(analysis.report, fmt)
