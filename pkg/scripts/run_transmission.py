#!/usr/bin/env python3
"""Probe sweep across the dressed cavity and extract the splitting."""

import sys
from pathlib import Path

from dickesim import cli

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "runs/transmission"
    raise SystemExit(cli.main([
        "transmission", "--config", str(ROOT / "configs" / "paper.cfg"),
        "--out", out, *sys.argv[2:],
    ]))
