"""
Permittivity models on the real and imaginary frequency axes.

Each material is an oscillator sum (Drude and Lorentz terms, parameters in eV)
read from ``data/materials.txt`` or the file named by ``DDSTRAP_MATERIAL_DATA``.
The same parameters give eps(w) on the real axis and its analytic continuation
eps(i xi) on the imaginary axis.
"""

import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from dotenv import load_dotenv
from scipy import constants

from ..models.schemas import ConfigError, PermittivityRangeError

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_MATERIAL_FILE = Path(__file__).resolve().parent.parent / "data" / "materials.txt"
EV = constants.e / constants.hbar  # 1 eV as angular frequency [rad/s]


@dataclass(frozen=True)
class MaterialModel:
    """Oscillator-sum permittivity; frequencies stored in rad/s."""
    name: str
    valid: Tuple[float, float]
    drude: Tuple[Tuple[float, float], ...] = ()  # (plasma, damping)
    lorentz: Tuple[Tuple[float, float, float], ...] = ()  # (strength, resonance, damping)

    def permittivity(self, omega):
        """Complex eps(w) for real w > 0 inside the validity range."""
        w = np.asarray(omega, dtype=float)
        lo, hi = self.valid
        if np.any(w <= 0) or np.any(w < lo) or np.any(w > hi):
            bad = float(np.ravel(w)[np.argmax((np.ravel(w) < lo) | (np.ravel(w) > hi) | (np.ravel(w) <= 0))])
            raise PermittivityRangeError(self.name, bad, self.valid)
        eps = np.ones_like(w, dtype=complex)
        for plasma, gamma in self.drude:
            eps -= plasma ** 2 / (w * (w + 1j * gamma))
        for strength, w0, gamma in self.lorentz:
            eps += strength * w0 ** 2 / (w0 ** 2 - w ** 2 - 1j * gamma * w)
        return complex(eps) if np.ndim(omega) == 0 else eps

    def permittivity_imag_axis(self, xi):
        """Real eps(i xi) >= 1 for xi >= 0 (the Drude term diverges at xi = 0)."""
        x = np.asarray(xi, dtype=float)
        eps = np.ones_like(x)
        with np.errstate(divide="ignore"):
            for plasma, gamma in self.drude:
                eps = eps + plasma ** 2 / (x * (x + gamma))
        for strength, w0, gamma in self.lorentz:
            eps = eps + strength * w0 ** 2 / (w0 ** 2 + x ** 2 + gamma * x)
        return float(eps) if np.ndim(xi) == 0 else eps

    def static_permittivity(self) -> float:
        if self.drude:
            return float("inf")
        return 1.0 + sum(strength for strength, _, _ in self.lorentz)


VACUUM = MaterialModel(name="vacuum", valid=(0.0, float("inf")))


class MaterialLibrary:
    """Named material models."""

    def __init__(self, models: Dict[str, MaterialModel]):
        self._models = dict(models)
        self._models.setdefault("vacuum", VACUUM)

    def __contains__(self, name: str) -> bool:
        return name in self._models

    @property
    def names(self) -> List[str]:
        return sorted(self._models)

    def get(self, name: str) -> MaterialModel:
        try:
            return self._models[name]
        except KeyError:
            raise ConfigError(f"unknown material '{name}' (known: {', '.join(self.names)})",
                              section="materials", key=name) from None

    def permittivity(self, name: str, omega):
        return self.get(name).permittivity(omega)

    def permittivity_imag_axis(self, name: str, xi):
        return self.get(name).permittivity_imag_axis(xi)


# =============================================================================
# File loading
# =============================================================================
def parse_materials(text: str, source: Path = DEFAULT_MATERIAL_FILE) -> MaterialLibrary:
    models: Dict[str, MaterialModel] = {}
    current: Optional[str] = None
    spec: Dict[str, list] = {}

    def close():
        if current is None:
            return
        if "valid" not in spec:
            raise ConfigError(f"{source.name}: material [{current}] has no valid_eV line", section=current, key="valid_eV")
        models[current] = MaterialModel(
            name=current,
            valid=spec["valid"],
            drude=tuple(spec.get("drude", [])),
            lorentz=tuple(spec.get("lorentz", [])),
        )

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            close()
            current = line[1:-1].strip()
            spec = {}
            continue
        if current is None:
            raise ConfigError(f"{source.name}:{lineno}: entry outside a [material] section", section="materials", line=lineno)
        kind, *values = line.split()
        try:
            numbers = [float(v) for v in values]
        except ValueError as e:
            raise ConfigError(f"{source.name}:{lineno}: {e}", section=current, line=lineno) from e
        expected = {"valid_eV": 2, "drude": 2, "lorentz": 3}
        if kind not in expected or len(numbers) != expected[kind]:
            raise ConfigError(f"{source.name}:{lineno}: cannot read '{line}'", section=current, line=lineno)
        if kind == "valid_eV":
            spec["valid"] = (numbers[0] * EV, numbers[1] * EV)
        elif kind == "drude":
            plasma, gamma = numbers
            spec.setdefault("drude", []).append((plasma * EV, gamma * EV))
        else:
            strength, w0, gamma = numbers
            if strength < 0 or w0 <= 0 or gamma < 0:
                raise ConfigError(f"{source.name}:{lineno}: lorentz terms need S >= 0, w0 > 0, g >= 0",
                                  section=current, line=lineno)
            spec.setdefault("lorentz", []).append((strength, w0 * EV, gamma * EV))
    close()
    return MaterialLibrary(models)


@lru_cache(maxsize=8)
def _load_cached(path: str) -> MaterialLibrary:
    file_path = Path(path)
    logger.debug("loading materials from %s", file_path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read material file {file_path}: {e}", section="materials") from e
    return parse_materials(text, file_path)


def load_materials(path: Optional[str] = None) -> MaterialLibrary:
    resolved = path or os.getenv("DDSTRAP_MATERIAL_DATA") or str(DEFAULT_MATERIAL_FILE)
    return _load_cached(str(resolved))


def permittivity(material: str, omega, library: Optional[MaterialLibrary] = None):
    return (library or load_materials()).permittivity(material, omega)


def permittivity_imag_axis(material: str, xi, library: Optional[MaterialLibrary] = None):
    return (library or load_materials()).permittivity_imag_axis(material, xi)


def refractive_index(material: str, omega, library: Optional[MaterialLibrary] = None):
    """sqrt(eps) on the branch with Im n >= 0."""
    n = np.sqrt(np.asarray(permittivity(material, omega, library), dtype=complex))
    n = np.where(n.imag < 0, -n, n)
    return complex(n) if np.ndim(omega) == 0 else n


def omega_from_wavelength(wavelength: float) -> float:
    return 2.0 * np.pi * constants.c / wavelength
