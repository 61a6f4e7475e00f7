#!/usr/bin/env python3
"""Single power-ramp threshold measurement with the shipped protocol."""

import sys
from pathlib import Path

from dickesim import cli

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "runs/ramp"
    raise SystemExit(cli.main([
        "ramp", "--config", str(ROOT / "configs" / "paper.cfg"),
        "--out", out, *sys.argv[2:],
    ]))
