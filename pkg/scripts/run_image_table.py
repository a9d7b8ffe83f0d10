#!/usr/bin/env python3
"""Run the grayscale image study on the synthetic target.

Example:  python scripts/run_image_table.py --trials 3
"""
import sys

from noisefold.cli import main

if __name__ == "__main__":
    args = ["image", "--synthetic", "--sigma0", "0.05,0.10,0.15,0.20",
            "--out", "image_table"] + sys.argv[1:]
    sys.exit(main(args))
