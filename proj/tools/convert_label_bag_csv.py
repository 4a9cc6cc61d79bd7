#!/usr/bin/env python3
"""Convert a headerless `label,bag_id,f0,...` MIL table into the milt CSV layout.

The multipleinstancelearning.com mirrors of Musk1/Musk2/Elephant/Fox/Tiger use
the headerless layout; milt expects `bag_id,label,f0,...,f{d-1}` with a header.
"""
import argparse
import csv
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("src")
    ap.add_argument("dst")
    ap.add_argument("--prefix", default="", help="prefix prepended to bag ids")
    args = ap.parse_args()

    with open(args.src, newline="") as f:
        rows = [r for r in csv.reader(f) if r]
    if not rows:
        print("empty input", file=sys.stderr)
        return 1
    d = len(rows[0]) - 2
    with open(args.dst, "w", newline="") as f:
        out = csv.writer(f, lineterminator="\n")
        out.writerow(["bag_id", "label"] + [f"f{k}" for k in range(d)])
        for r in rows:
            if len(r) != d + 2:
                print(f"ragged row for bag {r[1]}", file=sys.stderr)
                return 1
            label = int(float(r[0]))
            out.writerow([args.prefix + r[1].strip(), max(label, 0)] + [v.strip() for v in r[2:]])
    return 0


if __name__ == "__main__":
    sys.exit(main())
