#!/usr/bin/env python3
"""Threshold powers against atom number: ramp detections next to the
static instability curve and its calibration band."""

import sys
from pathlib import Path

from dickesim import cli

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "runs/threshold-map"
    raise SystemExit(cli.main([
        "threshold-map", "--config", str(ROOT / "configs" / "paper.cfg"),
        "--out", out, *sys.argv[2:],
    ]))
