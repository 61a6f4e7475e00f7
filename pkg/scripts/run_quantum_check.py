#!/usr/bin/env python3
"""Cross-validation battery at small dimensions; exits 3 on failure."""

import sys
from pathlib import Path

from dickesim import cli

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "runs/quantum-check"
    raise SystemExit(cli.main([
        "quantum-check", "--config", str(ROOT / "configs" / "paper.cfg"),
        "--out", out,
    ]))
