"""
Unit-bearing quantities

Every physical quantity in a run configuration is written with an explicit unit
("158 nm", "400 mW", "30 GHz", "18.6 deg"). The annotated types below parse such
strings into SI floats and emit them back in canonical SI form, so a configuration
survives a dump/parse round trip unchanged.

Frequencies written in the Hz family are cyclic and are stored as angular
frequencies (x 2*pi); "rad/s" is taken as-is.
"""

import math
import re
from dataclasses import dataclass
from typing import Annotated, Dict

from pydantic import BeforeValidator, PlainSerializer, ValidationInfo
from scipy import constants


_PREFIXES: Dict[str, float] = {
    "p": constants.pico,
    "n": constants.nano,
    "u": constants.micro,
    "µ": constants.micro,
    "μ": constants.micro,
    "m": constants.milli,
    "": 1.0,
    "k": constants.kilo,
    "M": constants.mega,
    "G": constants.giga,
    "T": constants.tera,
}


def _prefixed(base: str, scale: float = 1.0, prefixes: str = "pnuµμmkMGT") -> Dict[str, float]:
    table = {base: scale}
    for prefix in prefixes:
        table[f"{prefix}{base}"] = _PREFIXES[prefix] * scale
    return table


# dimension name -> (canonical SI unit, accepted spellings -> factor to SI)
UNIT_TABLE: Dict[str, tuple[str, Dict[str, float]]] = {
    "length": ("m", _prefixed("m", prefixes="pnuµμmk")),
    "power": ("W", _prefixed("W", prefixes="nuµμmk")),
    "angular_frequency": (
        "rad/s",
        {"rad/s": 1.0, **_prefixed("Hz", 2.0 * math.pi, prefixes="kMGT")},
    ),
    "angle": ("rad", {"rad": 1.0, "mrad": 1e-3, "deg": math.pi / 180.0}),
    "intensity": (
        "W/m^2",
        {
            "W/m^2": 1.0,
            "mW/cm^2": 10.0,
            "W/cm^2": 1e4,
            "uW/um^2": 1e6,
            "µW/µm^2": 1e6,
            "mW/um^2": 1e9,
        },
    ),
    "wavevector": ("1/m", {"1/m": 1.0, "1/um": 1e6, "1/nm": 1e9}),
    "time": ("s", _prefixed("s", prefixes="pnuµμm")),
    "energy": ("J", {"J": 1.0, **_prefixed("Hz", constants.h, prefixes="kMGT"), "eV": constants.e}),
}

_QUANTITY_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)\s*(\S+)\s*$")


@dataclass(frozen=True)
class Quantity:
    """Marker stored in ``Annotated`` metadata naming the dimension of a field."""

    dimension: str

    @property
    def si_unit(self) -> str:
        return UNIT_TABLE[self.dimension][0]


def parse_quantity(value, dimension: str) -> float:
    """
    Parse "<number> <unit>" into an SI float.

    Args:
        value: the raw value from the configuration (must be a string with a unit)
        dimension: key of ``UNIT_TABLE``

    Returns:
        float: the value in SI units

    Raises:
        ValueError: missing or unknown unit (pydantic turns this into a validation error)
    """
    if isinstance(value, bool):
        raise ValueError(f"expected a {dimension} with unit, got {value!r}")
    if isinstance(value, (int, float)):
        raise ValueError(f"{dimension} needs an explicit unit, e.g. '{value} {UNIT_TABLE[dimension][0]}'")
    if not isinstance(value, str):
        raise ValueError(f"expected a {dimension} string with unit, got {type(value).__name__}")

    match = _QUANTITY_RE.match(value)
    if match is None:
        raise ValueError(f"cannot read {value!r} as '<number> <unit>'")
    number, unit = match.groups()
    factors = UNIT_TABLE[dimension][1]
    if unit not in factors:
        accepted = ", ".join(sorted(factors))
        raise ValueError(f"unit {unit!r} is not a {dimension} unit (accepted: {accepted})")
    return float(number) * factors[unit]


def format_quantity(value: float, dimension: str) -> str:
    """Canonical SI spelling: repr of the float keeps the round trip exact."""
    return f"{float(value)!r} {UNIT_TABLE[dimension][0]}"


def _validator(dimension: str):
    def validate(value, info: ValidationInfo) -> float:
        # plain numbers are SI when built from Python; files must spell the unit
        strict = bool(info.context and info.context.get("require_units"))
        if not strict and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        return parse_quantity(value, dimension)

    return validate


def _quantity_type(dimension: str):
    return Annotated[
        float,
        Quantity(dimension),
        BeforeValidator(_validator(dimension)),
        PlainSerializer(lambda v: format_quantity(v, dimension), return_type=str, when_used="json"),
    ]


Length = _quantity_type("length")
Power = _quantity_type("power")
AngularFrequency = _quantity_type("angular_frequency")
Angle = _quantity_type("angle")
Intensity = _quantity_type("intensity")
Wavevector = _quantity_type("wavevector")
Duration = _quantity_type("time")
Energy = _quantity_type("energy")


def to_hz(energy_joule):
    """Energy in J -> U/h in Hz."""
    return energy_joule / constants.h


def angular_to_hz(omega):
    return omega / (2.0 * math.pi)
