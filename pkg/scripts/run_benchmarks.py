#!/usr/bin/env python3
"""Analyze the bundled Trojan benchmarks and print per-design summaries."""

import argparse
import time

from qflow import corpus
from qflow.pipeline import Config, analyze
from qflow.report import Thresholds, classify_value

BENCHMARKS = [
    ("aes_t2100.v", "TSC", ("key",), ()),
    ("aes_t2200.v", "TSC", ("key",), ()),
    ("aes_t2300_top.v", "top", (), ("aes_t2300.v",)),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-channel-inputs", type=int, default=5)
    args = parser.parse_args()

    thresholds = Thresholds()
    for name, top, highs, extra in BENCHMARKS:
        files = [corpus.path(n) for n in (*extra, name)]
        cfg = Config(files=files, top=top, high_overrides=highs,
                     max_channel_inputs=args.max_channel_inputs)
        t0 = time.perf_counter()
        result = analyze(cfg)
        elapsed = time.perf_counter() - t0
        counts = {"leak": 0, "warn": 0, "ok": 0}
        for v in result.totals.values():
            counts[classify_value(v, thresholds)] += 1
        print(f"{name:20s} top={top:4s} secrets={len(result.totals):3d} "
              f"leak={counts['leak']:3d} warn={counts['warn']:3d} "
              f"ok={counts['ok']:3d} total={sum(result.totals.values()):.4f} "
              f"[{elapsed:.2f}s]")


if __name__ == "__main__":
    main()
