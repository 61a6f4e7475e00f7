"""Flat key-value configuration files with explicit units.

One ``key = value`` pair per line, ``#`` comments, blank lines ignored.
Every physical quantity carries an explicit unit token (see
:mod:`dickesim.units` for the accepted tokens); counts and pure numbers
are bare.  Experiment blocks use dotted prefixes (``probe.eta_p``,
``ramp.duration``).  Unknown keys, unknown units and malformed values
are reported with the offending key and line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .meanfield import DetectionCriterion, RampProtocol
from .params import PhysicalConfig, PowerCalibration
from .units import parse_quantity

#: Expected kind per key; the public parsing contract.
KEY_KINDS: dict[str, str] = {
    # physical setup
    "g": "frequency",
    "kappa": "frequency",
    "gamma": "frequency",
    "Delta_c": "frequency",
    "omega_hf": "frequency",
    "omega_Z": "frequency",
    "eta": "frequency",
    "zeta": "frequency",
    "N_total": "int",
    "alpha": "plain",
    "beta": "plain",
    "f_lambda": "plain",
    "power_r": "power",
    "power_s": "power",
    # calibration
    "c_rabi": "rabi_calibration",
    # experiment selector
    "experiment": "string",
    # probe / transmission block
    "probe.delta_p_start": "frequency",
    "probe.delta_p_stop": "frequency",
    "probe.points": "int",
    "probe.eta_p": "frequency",
    "probe.n_max": "int",
    "probe.n_lambda_model": "int",
    # dispersive-shift map block
    "map.omega_d_start": "frequency",
    "map.omega_d_stop": "frequency",
    "map.rows": "int",
    "map.bin_width": "frequency",
    # ramp block
    "ramp.p_start": "power",
    "ramp.p_end": "power",
    "ramp.duration": "time",
    "ramp.split": "plain",
    "ramp.eta": "frequency",
    "ramp.zeta": "frequency",
    "ramp.seed": "plain",
    # detection chain
    "detector.photons": "plain",
    "detector.efficiency": "plain",
    "detector.bin": "time",
    # threshold map block
    "tmap.omega_d_start": "frequency",
    "tmap.omega_d_stop": "frequency",
    "tmap.points": "int",
    "tmap.band_lower": "plain",
    "tmap.band_upper": "plain",
    "tmap.duration": "time",
    # cross-validation block
    "check.n_lambda": "int",
    "check.n_max": "int",
}

EXPERIMENTS = ("params", "transmission", "splitting-map", "ramp",
               "threshold-map", "quantum-check")

_PHYSICAL_KEYS = ("g", "kappa", "gamma", "Delta_c", "omega_hf", "omega_Z")


def parse_entry(key: str, raw: str, where: str = "") -> object:
    """Parse one value according to the key table."""
    kind = KEY_KINDS.get(key)
    if kind is None:
        raise ConfigError(f"unknown key {key!r}{where}")
    raw = raw.strip()
    if kind == "string":
        return raw
    try:
        value, seen = parse_quantity(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}{where}: {exc}") from None
    if kind == "int":
        if seen != "plain" or value != int(value):
            raise ConfigError(f"key {key!r}{where}: expected a bare integer")
        return int(value)
    if kind == "plain":
        if seen != "plain":
            raise ConfigError(f"key {key!r}{where}: expected a bare number")
        return value
    if seen not in (kind, "plain"):
        raise ConfigError(
            f"key {key!r}{where}: expected a {kind} value, got {seen}"
        )
    if seen == "plain" and kind != "plain":
        raise ConfigError(
            f"key {key!r}{where}: missing unit (expected a {kind})"
        )
    return value


def load_config(path) -> dict[str, object]:
    """Parse a configuration file into canonical-unit values."""
    entries: dict[str, object] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = parse_entry(key, raw, where=f" (line {lineno})")
    return entries


def apply_overrides(entries: dict[str, object], overrides) -> dict[str, object]:
    """Apply ``key=value`` strings on top of parsed entries."""
    out = dict(entries)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = (part.strip() for part in item.split("=", 1))
        out[key] = parse_entry(key, raw, where=" (override)")
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    """Resolved scenario: physical setup, calibration and experiment
    blocks, all in canonical units."""

    physical: PhysicalConfig
    calibration: PowerCalibration
    experiment: str
    entries: dict[str, object] = field(repr=False)

    def block(self, prefix: str) -> dict[str, object]:
        cut = len(prefix) + 1
        return {k[cut:]: v for k, v in self.entries.items()
                if k.startswith(prefix + ".")}


def _require(entries: dict[str, object], keys, experiment: str) -> None:
    missing = [k for k in keys if k not in entries]
    if missing:
        raise ConfigError(
            f"experiment {experiment!r} needs keys: {', '.join(missing)}"
        )


def build_scenario(entries: dict[str, object],
                   experiment: str | None = None) -> ScenarioConfig:
    """Validate entries and assemble the scenario for one experiment."""
    exp = experiment or entries.get("experiment")
    if exp is None:
        raise ConfigError("no experiment selected (key 'experiment' or subcommand)")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; one of {EXPERIMENTS}")

    _require(entries, _PHYSICAL_KEYS + ("N_total", "c_rabi"), exp)
    calib = PowerCalibration(c_rabi=float(entries["c_rabi"]))
    try:
        physical = PhysicalConfig(
            g=entries["g"], kappa=entries["kappa"], gamma=entries["gamma"],
            Delta_c=entries["Delta_c"], omega_hf=entries["omega_hf"],
            omega_Z=entries["omega_Z"],
            eta=entries.get("eta", 0.0), zeta=entries.get("zeta", 0.0),
            N_total=entries["N_total"],
            alpha=entries.get("alpha", 0.66),
            beta=entries.get("beta", 0.78),
            f_lambda=entries.get("f_lambda", 1.0 / 3.0),
        ).with_powers(calib, entries.get("power_r", 0.0),
                      entries.get("power_s", 0.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    needed = {
        "params": (),
        "transmission": ("probe.delta_p_start", "probe.delta_p_stop",
                         "probe.points", "probe.eta_p", "probe.n_max"),
        "splitting-map": ("probe.delta_p_start", "probe.delta_p_stop",
                          "probe.points", "probe.eta_p", "probe.n_max",
                          "map.omega_d_start", "map.omega_d_stop",
                          "map.rows"),
        "ramp": ("ramp.p_start", "ramp.p_end", "ramp.duration"),
        "threshold-map": ("ramp.p_start", "ramp.p_end", "ramp.duration",
                          "tmap.omega_d_start", "tmap.omega_d_stop",
                          "tmap.points"),
        "quantum-check": (),
    }[exp]
    _require(entries, needed, exp)
    return ScenarioConfig(physical=physical, calibration=calib,
                          experiment=exp, entries=dict(entries))


def ramp_protocol(scenario: ScenarioConfig) -> RampProtocol:
    block = scenario.block("ramp")
    try:
        return RampProtocol(
            P_start=block["p_start"], P_end=block["p_end"],
            duration=block["duration"], split=block.get("split", 0.5),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"ramp block invalid: {exc}") from None


def detection_criterion(scenario: ScenarioConfig) -> DetectionCriterion:
    block = scenario.block("detector")
    try:
        return DetectionCriterion(
            photons=block.get("photons", 10.0),
            efficiency=block.get("efficiency", 0.177),
            bin_us=block.get("bin", 5.0),
        )
    except ValueError as exc:
        raise ConfigError(f"detector block invalid: {exc}") from None
