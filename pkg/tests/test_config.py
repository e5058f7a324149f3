import json
import math

import pytest

from ddstrap.models.schemas import ConfigError, RunConfig, ScanSpec
from ddstrap.utils.config import (
    apply_overrides,
    default_threads,
    emit_config,
    field_dimension,
    load_optimization_preset,
    load_preset,
    load_scan_preset,
    parse_config,
    parse_parameter,
    resolve_config,
    resolve_document,
)
from ddstrap.presets import SCAN_PRESETS
from ddstrap.utils.units import format_quantity, parse_quantity

MISSING_THICKNESS = """{
  "name": "broken",
  "surface": {
    "layers": [
      {"material": "SiO2"}
    ],
    "substrate": "Si"
  }
}
"""

UNITLESS_THICKNESS = """{
  "name": "broken",
  "surface": {
    "layers": [
      {"material": "SiO2", "thickness": 158}
    ],
    "substrate": "Si"
  }
}
"""


def _write(tmp_path, text, name="run.json"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.mark.parametrize("text,dimension,expected", [
    ("158 nm", "length", 158e-9),
    ("2 um", "length", 2e-6),
    ("400 mW", "power", 0.4),
    ("30 GHz", "angular_frequency", 2 * math.pi * 30e9),
    ("1e6 rad/s", "angular_frequency", 1e6),
    ("18.6 deg", "angle", math.radians(18.6)),
    ("1 kHz", "energy", 6.62607015e-31),
])
def test_parse_quantity(text, dimension, expected):
    """Ensure unit strings become SI floats (Hz as angular frequency)."""
    assert parse_quantity(text, dimension) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("value", [158, "158", "158 parsec", True])
def test_parse_quantity_rejects(value):
    """Ensure missing and unknown units are refused."""
    with pytest.raises(ValueError):
        parse_quantity(value, "length")


def test_format_quantity_is_canonical():
    """Ensure the emitted string parses back to the same float."""
    value = 2 * math.pi * 30e9
    assert parse_quantity(format_quantity(value, "angular_frequency"), "angular_frequency") == value


def test_reference_preset():
    """Ensure the planar preset carries the reference operating point."""
    config = load_preset("fig2e")
    assert [layer.thickness for layer in config.surface.layers] == pytest.approx([158e-9, 41e-9])
    assert config.surface.substrate == "Si"
    assert config.lasers.power_1529_back == pytest.approx(0.4)
    assert config.lasers.detuning_780 == pytest.approx(2 * math.pi * 30e9)
    assert config.lasers.wavelength_1529 == pytest.approx(1529.34e-9)
    assert config.grating is None


def test_grating_preset():
    """Ensure the lattice preset describes the ridge grating."""
    config = load_preset("fig6")
    assert config.grating.period == pytest.approx(100e-9)
    assert config.grating.fill_factor == pytest.approx(0.25)
    assert config.lasers.alpha_1529 == pytest.approx(7.0)


def test_unknown_preset():
    """Ensure an unknown preset names itself."""
    with pytest.raises(ConfigError) as exc:
        load_preset("fig99")
    assert exc.value.key == "fig99"
    assert exc.value.exit_code == 2


def test_bundled_scan_and_optimization_presets():
    """Ensure every bundled document validates."""
    for name in SCAN_PRESETS:
        assert isinstance(load_scan_preset(name), ScanSpec)
    assert load_optimization_preset("fig2b").stack.dielectric_thickness.count == 17
    assert load_optimization_preset("fig5b").grating is not None


def test_missing_key_names_section_and_line(tmp_path):
    """Ensure a missing key is reported with its section, key and line."""
    with pytest.raises(ConfigError) as exc:
        parse_config(_write(tmp_path, MISSING_THICKNESS))
    error = exc.value
    assert error.key == "thickness"
    assert error.section == "surface"
    assert error.line == 4
    assert "thickness" in error.error_message
    assert error.dict()["extras"]["key"] == "thickness"


def test_unitless_quantity(tmp_path):
    """Ensure a file quantity without unit is rejected at its line."""
    with pytest.raises(ConfigError) as exc:
        parse_config(_write(tmp_path, UNITLESS_THICKNESS))
    assert exc.value.key == "thickness"
    assert exc.value.line == 5
    assert "unit" in exc.value.error_message


def test_malformed_json(tmp_path):
    """Ensure a JSON syntax error carries its line."""
    with pytest.raises(ConfigError) as exc:
        parse_config(_write(tmp_path, '{\n  "name": "x",\n  oops\n}'))
    assert exc.value.line == 3


def test_unreadable_file(tmp_path):
    """Ensure a missing file is a configuration error."""
    with pytest.raises(ConfigError):
        parse_config(str(tmp_path / "absent.json"))


@pytest.mark.parametrize("preset", ["fig2e", "fig6"])
def test_emit_parse_round_trip(tmp_path, preset):
    """Ensure the canonical form reads back to the same configuration."""
    config = load_preset(preset)
    text = emit_config(config)
    assert parse_config(_write(tmp_path, text)).model_dump() == config.model_dump()
    assert "nm" not in text


def test_overrides():
    """Ensure dotted paths replace values and revalidate."""
    config = load_preset("fig2e")
    changed = apply_overrides(config, {"lasers.power_780": 0.1, "surface.layers.0.thickness": 150e-9})
    assert changed.lasers.power_780 == pytest.approx(0.1)
    assert changed.surface.layers[0].thickness == pytest.approx(150e-9)
    assert config.lasers.power_780 == pytest.approx(0.2)
    with pytest.raises(ConfigError):
        apply_overrides(config, {"grating.period": 120e-9})
    with pytest.raises(ConfigError):
        apply_overrides(config, {"lasers.power_780": -1.0})


def test_parameter_dimensions():
    """Ensure dotted parameters resolve to their unit dimension."""
    assert field_dimension(RunConfig, "lasers.power_780") == "power"
    assert field_dimension(RunConfig, "surface.layers.0.thickness") == "length"
    assert field_dimension(RunConfig, "lasers.alpha_1529") is None
    assert parse_parameter(RunConfig, "lasers.detuning_780", "20 GHz") == pytest.approx(2 * math.pi * 20e9)
    with pytest.raises(ConfigError):
        parse_parameter(RunConfig, "lasers.detuning_780", "20 m")
    with pytest.raises(ConfigError):
        field_dimension(RunConfig, "lasers.colour")


def test_resolve_sources(tmp_path):
    """Ensure files win over presets and a missing source is an error."""
    path = _write(tmp_path, emit_config(load_preset("fig4")))
    assert resolve_config(path, "fig2e").name == "fig4"
    assert resolve_config(None, "fig2e").name == "fig2e"
    with pytest.raises(ConfigError):
        resolve_config(None, None)
    scan_path = _write(tmp_path, json.dumps({"axes": [
        {"parameter": "lasers.power_780", "start": "1 mW", "stop": "2 mW", "count": 2}]}), "scan.json")
    assert resolve_document(scan_path, SCAN_PRESETS, ScanSpec).axes[0].count == 2


def test_default_threads(monkeypatch):
    """Ensure DDSTRAP_THREADS sets the worker count."""
    monkeypatch.setenv("DDSTRAP_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.delenv("DDSTRAP_THREADS")
    assert default_threads() >= 1
