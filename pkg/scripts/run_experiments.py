#!/usr/bin/env python3
"""Run the verification suites and every experiment with default settings,
collecting the outputs under runs/ (one directory per command).

Usage: python scripts/run_experiments.py [--paths P] [--seed S] [--root DIR]
"""

import argparse
import pathlib
import sys

from heisenpaths.cli import main as cli


def run(root: pathlib.Path, label: str, args: list[str]) -> int:
    out = root / label
    print(f"== {label}: heisenpaths {' '.join(args)}")
    code = cli(args + ["--out", str(out)])
    print(f"== {label}: exit {code}\n")
    return code


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--root", default="runs")
    ns = ap.parse_args()

    root = pathlib.Path(ns.root)
    root.mkdir(parents=True, exist_ok=True)
    common = [f"paths={ns.paths}", f"seed={ns.seed}"]

    jobs = [
        ("verify-geometry", ["verify", "geometry"] + common),
        ("verify-operators", ["verify", "operators"] + common),
        ("experiment-cayley", ["experiment", "cayley"] + common),
        ("experiment-kelvin", ["experiment", "kelvin"] + common),
        ("experiment-tdist", ["experiment", "tdist"] + common),
        ("experiment-semigroup", ["experiment", "semigroup"] + common),
    ]
    codes = {label: run(root, label, args) for label, args in jobs}
    bad = {k: v for k, v in codes.items() if v != 0}
    if bad:
        print(f"failures: {bad}")
        return 1
    print(f"all runs passed; outputs under {root}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
