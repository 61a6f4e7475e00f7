"""Run-record output: deterministic CSV, JSON summaries, atomic writes.

Data files never contain wall-clock information; identical inputs give
byte-identical CSV and summary files.  Timestamps and environment
details live only in the manifest.  A run directory is assembled in a
temporary sibling and renamed into place, so partial runs never leave a
half-written record.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError


def fmt(value) -> str:
    """Stable text form for CSV cells."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(fh, header, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def write_csv_file(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_csv(fh, header, rows)


def write_json_file(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def manifest_payload(entries: dict, experiment: str, outputs: list[str],
                     argv: list[str] | None = None) -> dict:
    import numpy
    import scipy

    from . import __version__

    return {
        "experiment": experiment,
        "resolved_config": {k: entries[k] for k in sorted(entries)},
        "outputs": sorted(outputs),
        "argv": argv or [],
        "versions": {
            "dickesim": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
        "written_utc": datetime.now(timezone.utc).isoformat(),
    }


class RunDirectory:
    """Atomic run-directory writer: stage files, then commit by rename."""

    def __init__(self, target) -> None:
        self.target = Path(target)
        if self.target.exists():
            try:
                self.target.rmdir()  # succeeds only when empty
            except OSError:
                raise ConfigError(
                    f"output directory {self.target} exists and is not empty"
                ) from None
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self._staging = Path(tempfile.mkdtemp(
            prefix=f".{self.target.name}.tmp-", dir=self.target.parent))
        self.outputs: list[str] = []

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self._staging / name

    def commit(self) -> Path:
        os.replace(self._staging, self.target)
        return self.target

    def abort(self) -> None:
        for child in self._staging.glob("*"):
            child.unlink()
        self._staging.rmdir()
