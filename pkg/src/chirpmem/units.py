"""Parsing of unit-suffixed physical quantities ("385 kHz", "200 us", "20 MHz/ms").

Config files carry explicit unit suffixes on every dimensioned value; everything
is converted to base SI (Hz, s, T, rad) at the boundary and stays that way
internally.  Conversion to angular frequency happens only inside propagation
kernels, never here.
"""

from __future__ import annotations

import math
import re

_FREQ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "μs": 1e-6, "ns": 1e-9}
_FIELD = {"t": 1.0, "mt": 1e-3, "ut": 1e-6, "µt": 1e-6, "μt": 1e-6}
_ANGLE = {"rad": 1.0, "deg": math.pi / 180.0}

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


class UnitError(ValueError):
    """A quantity string could not be parsed or has the wrong dimension."""


def _parse(value, table: dict[str, float], kind: str, allow_bare: bool) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if allow_bare:
            return float(value)
        raise UnitError(f"expected a {kind} with a unit suffix, got bare number {value!r}")
    if not isinstance(value, str):
        raise UnitError(f"expected a {kind} string, got {type(value).__name__}")
    m = re.fullmatch(rf"\s*({_NUMBER})\s*([^\s]*)\s*", value)
    if not m:
        raise UnitError(f"cannot parse {kind} {value!r}")
    num, suffix = float(m.group(1)), m.group(2).lower()
    if not suffix:
        if allow_bare:
            return num
        raise UnitError(f"missing unit suffix on {kind} {value!r}")
    if suffix not in table:
        raise UnitError(f"unknown {kind} unit {m.group(2)!r} in {value!r}")
    return num * table[suffix]


def parse_frequency(value, allow_bare: bool = False) -> float:
    """'385 kHz' -> 385e3 (Hz)."""
    return _parse(value, _FREQ, "frequency", allow_bare)


def parse_time(value, allow_bare: bool = False) -> float:
    """'200 us' -> 2e-4 (s)."""
    return _parse(value, _TIME, "time", allow_bare)


def parse_field(value, allow_bare: bool = False) -> float:
    """'46 mT' -> 0.046 (T)."""
    return _parse(value, _FIELD, "field", allow_bare)


def parse_angle(value, allow_bare: bool = True) -> float:
    """'90 deg' -> pi/2; bare numbers are radians."""
    return _parse(value, _ANGLE, "angle", allow_bare)


def parse_chirp_rate(value, allow_bare: bool = False) -> float:
    """'20 MHz/ms' -> 2e10 (Hz/s).  Accepts any frequency/time suffix pair."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if allow_bare:
            return float(value)
        raise UnitError(f"expected a chirp rate with a unit suffix, got bare number {value!r}")
    if not isinstance(value, str):
        raise UnitError(f"expected a chirp-rate string, got {type(value).__name__}")
    m = re.fullmatch(rf"\s*({_NUMBER})\s*([^\s/]+)\s*/\s*([^\s/]+)\s*", value)
    if not m:
        raise UnitError(f"cannot parse chirp rate {value!r} (expected e.g. '20 MHz/ms')")
    num = float(m.group(1))
    fu, tu = m.group(2).lower(), m.group(3).lower()
    if fu not in _FREQ:
        raise UnitError(f"unknown frequency unit {m.group(2)!r} in {value!r}")
    if tu not in _TIME:
        raise UnitError(f"unknown time unit {m.group(3)!r} in {value!r}")
    return num * _FREQ[fu] / _TIME[tu]


def parse_scalar(value) -> float:
    """Dimensionless number; strings allowed for YAML convenience."""
    if isinstance(value, bool):
        raise UnitError(f"expected a number, got boolean {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise UnitError(f"cannot parse number {value!r}") from exc
