"""Unit conventions and quantity parsing.

The whole package works in a single unit system:

* angular frequencies in rad/us, so an ordinary frequency of 1 MHz is
  2*pi rad/us,
* times in us,
* beam powers in mW,
* rates reported per ms where noted.

Configuration files state ordinary frequencies with an explicit SI unit
("Delta_c = -127 GHz"); parsing converts them to angular rad/us.  The
accepted unit tokens are part of the public contract:

=============  =======================  =========================
token          meaning                  internal value
=============  =======================  =========================
Hz kHz MHz GHz ordinary frequency       angular rad/us (2*pi*f)
rad/us         angular frequency        unchanged
uW mW W        beam power               mW
us ms s        duration                 us
MHz/sqrt(mW)   Rabi-per-root-power      rad/(us*sqrt(mW))
(none)         dimensionless or count   unchanged
=============  =======================  =========================
"""

from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi

#: rad/us per ordinary-frequency unit
_FREQ_SCALE = {
    "Hz": TWO_PI * 1e-6,
    "kHz": TWO_PI * 1e-3,
    "MHz": TWO_PI,
    "GHz": TWO_PI * 1e3,
}

_POWER_SCALE = {"uW": 1e-3, "mW": 1.0, "W": 1e3}

_TIME_SCALE = {"us": 1.0, "ms": 1e3, "s": 1e6}


def mhz(value: float) -> float:
    """Angular frequency (rad/us) of an ordinary frequency in MHz."""
    return TWO_PI * value


def to_mhz(angular: float) -> float:
    """Ordinary frequency in MHz of an angular frequency in rad/us."""
    return angular / TWO_PI


def parse_quantity(text: str) -> tuple[float, str]:
    """Parse ``"<number> [unit]"`` into ``(value, kind)``.

    ``kind`` is one of ``"frequency"`` (returned in rad/us), ``"power"``
    (mW), ``"time"`` (us), ``"rabi_calibration"`` (rad/(us*sqrt(mW))) or
    ``"plain"``.  Raises ``ValueError`` on malformed numbers or unknown
    units; callers wrap this into ``ConfigError`` with file context.
    """
    parts = text.strip().split()
    if not parts or len(parts) > 2:
        raise ValueError(f"expected '<number> [unit]', got {text!r}")
    try:
        value = float(parts[0])
    except ValueError:
        raise ValueError(f"not a number: {parts[0]!r}") from None
    if len(parts) == 1:
        return value, "plain"
    unit = parts[1]
    if unit in _FREQ_SCALE:
        return value * _FREQ_SCALE[unit], "frequency"
    if unit == "rad/us":
        return value, "frequency"
    if unit in _POWER_SCALE:
        return value * _POWER_SCALE[unit], "power"
    if unit in _TIME_SCALE:
        return value * _TIME_SCALE[unit], "time"
    if unit == "MHz/sqrt(mW)":
        return value * TWO_PI, "rabi_calibration"
    raise ValueError(f"unknown unit {unit!r}")
