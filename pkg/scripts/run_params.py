#!/usr/bin/env python3
"""Print the derived model parameters of the shipped configuration."""

import sys
from pathlib import Path

from dickesim import cli

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "runs/params"
    raise SystemExit(cli.main([
        "params", "--config", str(ROOT / "configs" / "paper.cfg"),
        "--out", out,
    ]))
