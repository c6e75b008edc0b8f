"""Unit-suffixed quantities such as ``480nm``, ``10mW`` or ``19.84GHz``.

Every physical field in a scenario file carries its unit. Values are
converted to SI on load; frequencies stay cyclic (Hz) here and become angular
only when model objects are built.
"""
from __future__ import annotations

import math
import re

from ..atomic.scheme import EA0
from ..errors import ConfigurationError

# dimension -> {suffix: factor to SI}
UNITS: dict[str, dict[str, float]] = {
    "length": {"km": 1e3, "m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "nW": 1e-9},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "temperature": {"K": 1.0},
    "dipole": {"C*m": 1.0, "ea0": EA0},
    "calibration": {"V/m/sqrtmW": 1.0},
    "responsivity": {"A/W": 1.0},
    "nep": {"W/sqrtHz": 1.0, "pW/sqrtHz": 1e-12, "fW/sqrtHz": 1e-15},
    "resistance": {"ohm": 1.0},
    "density": {"m^-3": 1.0, "cm^-3": 1e6},
    # source power level; linear powers are accepted and converted
    "level": {"dBm": 1.0},
}

#: Unit written back when a resolved config is echoed.
BASE_UNIT = {
    "length": "m",
    "power": "W",
    "frequency": "Hz",
    "temperature": "K",
    "dipole": "C*m",
    "calibration": "V/m/sqrtmW",
    "responsivity": "A/W",
    "nep": "W/sqrtHz",
    "resistance": "ohm",
    "density": "m^-3",
    "level": "dBm",
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z^*/][A-Za-z0-9^*/\-]*)\s*$")


def parse_quantity(value, dimension: str, field: str) -> float:
    """SI value of ``value`` (a string like ``"2.5mm"``) for a field of ``dimension``."""
    if dimension not in UNITS:
        raise ValueError(f"unknown dimension {dimension!r}")
    if isinstance(value, bool) or not isinstance(value, str):
        allowed = ", ".join(UNITS[dimension])
        raise ConfigurationError(
            f"physical quantity needs an explicit unit, got {value!r} (use one of: {allowed})", field=field
        )
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigurationError(f"cannot read {value!r} as number + unit", field=field)
    number, unit = float(m.group(1)), m.group(2)
    if dimension == "level" and unit in UNITS["power"]:
        watts = number * UNITS["power"][unit]
        if watts <= 0:
            raise ConfigurationError(f"power {value!r} must be > 0 to express in dBm", field=field)
        return 10 * math.log10(watts / 1e-3)
    table = UNITS[dimension]
    if unit not in table:
        raise ConfigurationError(
            f"unit {unit!r} is not a {dimension} unit (use one of: {', '.join(table)})", field=field
        )
    return number * table[unit]


def format_quantity(value: float, dimension: str) -> str:
    """Round-trip exact text form of an SI value."""
    return f"{float(value)!r}{BASE_UNIT[dimension]}"
