#!/usr/bin/env python3
"""Run the shipped rank sweep; extra CLI flags pass through.

Example:  python scripts/run_rank_sweep.py --n-trials 5 --jobs 2
"""
import sys
from pathlib import Path

from noisefold.cli import main

HERE = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    args = ["sweep", "--config", str(HERE / "configs" / "rank_sweep.cfg"),
            "--out", "rank_sweep.csv"] + sys.argv[1:]
    sys.exit(main(args))
