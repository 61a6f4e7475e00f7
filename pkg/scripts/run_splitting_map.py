#!/usr/bin/env python3
"""Transmission map over atom number, binned by dispersive shift.

Takes a couple of minutes at the shipped resolution; pass extra
``--set`` overrides (e.g. ``--set map.rows=4``) to shrink it.
"""

import sys
from pathlib import Path

from dickesim import cli

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "runs/splitting-map"
    raise SystemExit(cli.main([
        "splitting-map", "--config", str(ROOT / "configs" / "paper.cfg"),
        "--out", out, *sys.argv[2:],
    ]))
