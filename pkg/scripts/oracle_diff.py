#!/usr/bin/env python3
"""Run the seeded differential harness across several seeds.

For each random circuit the analyzer's design-total estimate (cap off)
is compared against the exact joint leakage; any circuit where the
estimate falls below the exact value is reported as a violation.
"""

import argparse

from qflow.oracle import differential_run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", default="42,0,1,7,123,999")
    parser.add_argument("--count", type=int, default=200)
    args = parser.parse_args()

    grand_total = grand_bad = 0
    for seed in (int(s) for s in args.seeds.split(",")):
        records = differential_run(seed=seed, count=args.count)
        bad = [r for r in records if not r.dominated]
        margin = min(r.qmodel_bits - r.exact_bits for r in records)
        print(f"seed {seed:5d}: {len(records)} circuits, "
              f"{len(bad)} violations, min margin {margin:.6f}")
        grand_total += len(records)
        grand_bad += len(bad)
    print(f"overall: {grand_total} circuits, {grand_bad} violations")
    return 1 if grand_bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
