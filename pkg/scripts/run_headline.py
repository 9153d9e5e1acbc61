#!/usr/bin/env python3
"""Headline run: simulate 1e7 trials at the 100 ns delay, estimate the
optical-mechanical cross-correlation and test it against the classical
bound. Writes the tag stream and an analysis directory next to --out.

Usage: python scripts/run_headline.py [--out DIR] [--seed N] [--trials N]
"""

import argparse
import sys
from pathlib import Path

from phononherald import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="headline_run")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stream = out / "headline.tags"

    sim = ["simulate", "--out", str(stream),
           "--delta-t-ns", "100", "--threads", str(args.threads)]
    ana = ["analyze", str(stream), "--out", str(out / "analysis"),
           "--delta-n", "10"]
    for extra in (("--seed", args.seed), ("--trials", args.trials)):
        if extra[1] is not None:
            sim += [extra[0], str(extra[1])]
            ana += [extra[0], str(extra[1])]

    code = cli.main(sim)
    if code:
        return code
    code = cli.main(ana)
    print((out / "analysis" / "correlations.csv").read_text(), end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
