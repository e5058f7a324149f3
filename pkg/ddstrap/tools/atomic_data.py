"""
Rubidium-87 transition data, dynamic polarizabilities and recoil energies.

The transition table is a bundled plain-text file (see ``data/rb87_transitions.txt``);
``DDSTRAP_ATOMIC_DATA`` points to an alternative file. Loaded data is immutable and
shared between threads.
"""

import logging
import math
import os
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
from dotenv import load_dotenv
from scipy import constants

from ..models.schemas import ConfigError, DomainError

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_DATA_FILE = Path(__file__).resolve().parent.parent / "data" / "rb87_transitions.txt"
BOHR_DIPOLE = constants.e * constants.physical_constants["Bohr radius"][0]

_J_RE = re.compile(r"(\d+)/2$")


def j_from_label(label: str) -> float:
    """Total angular momentum from a fine-structure label such as '5P3/2'."""
    match = _J_RE.search(label)
    if match is None:
        raise ConfigError(f"cannot read J from state label '{label}'", section="atomic_data", key=label)
    return int(match.group(1)) / 2.0


@dataclass(frozen=True)
class Transition:
    lower: str
    upper: str
    wavelength: float  # [m], vacuum
    dipole: float  # reduced dipole [C m]

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * constants.c / self.wavelength


@dataclass(frozen=True)
class TransitionTable:
    entries: Tuple[Transition, ...]
    d2: Transition
    dressing: Transition

    @property
    def states(self) -> set:
        return {t.lower for t in self.entries} | {t.upper for t in self.entries}

    @property
    def polarizable_states(self) -> set:
        """States with upward lines in the table; only their sums over states are complete."""
        return {t.lower for t in self.entries}

    def channels(self, state: str) -> Tuple[np.ndarray, np.ndarray]:
        """
        Signed transition frequencies w_mn and reduced dipoles seen from ``state``.

        Upward lines (state is the lower level) are positive, downward lines negative.
        """
        omegas, dipoles = [], []
        for t in self.entries:
            if t.lower == state:
                omegas.append(t.omega)
                dipoles.append(t.dipole)
            elif t.upper == state:
                omegas.append(-t.omega)
                dipoles.append(t.dipole)
        if not omegas:
            known = ", ".join(sorted(self.states))
            raise ConfigError(f"unknown atomic state '{state}' (known: {known})", section="atomic_data", key=state)
        return np.asarray(omegas), np.asarray(dipoles)


@dataclass(frozen=True)
class AtomConstants:
    mass: float  # [kg]
    gamma0: float  # D2 natural linewidth [rad/s]
    k0: float  # D2 wavevector [1/m]
    dressing_dipole: float  # effective 5P-4D coupling [C m]
    d2_isotropic_dipole: float  # 780 nm coupling used for Omega_R(P) [C m]

    @property
    def omega_r(self) -> float:
        """Recoil angular frequency hbar k0^2 / 2m."""
        return constants.hbar * self.k0 ** 2 / (2.0 * self.mass)

    @property
    def omega_0(self) -> float:
        return self.k0 * constants.c


class AtomicData:
    """Transition table plus atom constants, with the polarizability sums."""

    def __init__(self, table: TransitionTable, atom: AtomConstants, degeneracy: str = "J+1"):
        if degeneracy not in ("J+1", "2J+1"):
            raise ConfigError(f"degeneracy must be 'J+1' or '2J+1', got '{degeneracy}'", section="atomic_data", key="degeneracy")
        self.table = table
        self.atom = atom
        self.degeneracy = degeneracy

    def _sum_channels(self, state: str) -> Tuple[np.ndarray, np.ndarray]:
        omegas, dipoles = self.table.channels(state)
        if state not in self.table.polarizable_states:
            allowed = ", ".join(sorted(self.table.polarizable_states))
            raise DomainError(f"the table lists no upward lines for '{state}'; polarizabilities are available for {allowed}",
                              {"state": state})
        return omegas, dipoles

    def _prefactor(self, state: str) -> float:
        j = j_from_label(state)
        weight = j + 1.0 if self.degeneracy == "J+1" else 2.0 * j + 1.0
        return 2.0 / (3.0 * constants.hbar * weight)

    def dynamic_polarizability(self, state: str, xi):
        """
        Isotropic polarizability on the imaginary axis.

        Args:
            state: fine-structure label, e.g. '5S1/2'
            xi: imaginary angular frequency [rad/s], scalar or array, >= 0

        Returns:
            alpha(i xi) in C^2 m^2 / J, same shape as ``xi``

        Raises:
            ConfigError: unknown state label
            DomainError: negative xi, or a state without upward lines in the table
        """
        omegas, dipoles = self._sum_channels(state)
        xi_arr = np.asarray(xi, dtype=float)
        if np.any(xi_arr < 0):
            raise DomainError("imaginary frequency must be >= 0", {"state": state})
        weights = omegas * dipoles ** 2
        terms = weights / (omegas ** 2 + xi_arr[..., None] ** 2)
        alpha = self._prefactor(state) * terms.sum(axis=-1)
        return float(alpha) if np.ndim(xi) == 0 else alpha

    def asymptotic_coefficient(self, state: str) -> float:
        """Limit of xi^2 alpha(i xi) for xi -> infinity."""
        omegas, dipoles = self._sum_channels(state)
        return self._prefactor(state) * float(np.sum(omegas * dipoles ** 2))

    def polarizability_integral(self, state: str) -> float:
        """Closed form of the integral of alpha(i xi) over xi in [0, inf)."""
        omegas, dipoles = self._sum_channels(state)
        return self._prefactor(state) * 0.5 * math.pi * float(np.sum(np.sign(omegas) * dipoles ** 2))

    def lattice_recoil_energy(self, period: float) -> float:
        """E_R = hbar^2 (pi / period)^2 / 2m."""
        if not period > 0:
            raise DomainError("lattice period must be > 0", {"period": period})
        return (constants.hbar * math.pi / period) ** 2 / (2.0 * self.atom.mass)


# =============================================================================
# File loading
# =============================================================================
def _parse_metadata(line: str, lineno: int, path: Path) -> Tuple[str, str]:
    body = line[2:]
    if "=" not in body:
        raise ConfigError(f"{path.name}:{lineno}: metadata line needs 'key = value'", section="atomic_data", line=lineno)
    key, value = (part.strip() for part in body.split("=", 1))
    return key, value


def parse_atomic_data(text: str, source: Path = DEFAULT_DATA_FILE) -> AtomicData:
    """Parse the transition file format; errors name the offending line."""
    entries = []
    meta: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#@"):
            key, value = _parse_metadata(line, lineno, source)
            meta[key] = value
            continue
        if line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ConfigError(
                f"{source.name}:{lineno}: expected 'lower upper wavelength_nm dipole_ea0'",
                section="atomic_data", line=lineno,
            )
        lower, upper, wavelength_nm, dipole_ea0 = fields
        try:
            wavelength = float(wavelength_nm) * 1e-9
            dipole = float(dipole_ea0) * BOHR_DIPOLE
        except ValueError as e:
            raise ConfigError(f"{source.name}:{lineno}: {e}", section="atomic_data", line=lineno) from e
        if wavelength <= 0 or dipole < 0:
            raise ConfigError(f"{source.name}:{lineno}: wavelength must be > 0 and dipole >= 0",
                              section="atomic_data", line=lineno)
        entries.append(Transition(lower, upper, wavelength, dipole))

    for required in ("mass_amu", "gamma0_per_s", "d2_line", "dressing_line", "dressing_dipole_ea0",
                     "d2_isotropic_dipole_ea0"):
        if required not in meta:
            raise ConfigError(f"{source.name}: missing metadata '#@ {required} = ...'", section="atomic_data", key=required)

    def find(pair: str) -> Transition:
        lower, upper = pair.split()
        for t in entries:
            if t.lower == lower and t.upper == upper:
                return t
        raise ConfigError(f"{source.name}: line '{pair}' is not in the table", section="atomic_data", key=pair)

    d2 = find(meta["d2_line"])
    table = TransitionTable(entries=tuple(entries), d2=d2, dressing=find(meta["dressing_line"]))
    atom = AtomConstants(
        mass=float(meta["mass_amu"]) * constants.m_u,
        gamma0=float(meta["gamma0_per_s"]),
        k0=2.0 * math.pi / d2.wavelength,
        dressing_dipole=float(meta["dressing_dipole_ea0"]) * BOHR_DIPOLE,
        d2_isotropic_dipole=float(meta["d2_isotropic_dipole_ea0"]) * BOHR_DIPOLE,
    )
    if not (atom.mass > 0 and atom.gamma0 > 0):
        raise ConfigError(f"{source.name}: mass and gamma0 must be > 0", section="atomic_data")
    return AtomicData(table, atom, degeneracy=meta.get("degeneracy", "J+1"))


@lru_cache(maxsize=8)
def _load_cached(path: str) -> AtomicData:
    file_path = Path(path)
    logger.debug("loading atomic data from %s", file_path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read atomic data file {file_path}: {e}", section="atomic_data") from e
    return parse_atomic_data(text, file_path)


def load_atomic_data(path: Optional[str] = None) -> AtomicData:
    """Load (and memoize) the atomic data; ``DDSTRAP_ATOMIC_DATA`` overrides the bundled file."""
    resolved = path or os.getenv("DDSTRAP_ATOMIC_DATA") or str(DEFAULT_DATA_FILE)
    return _load_cached(str(resolved))


def dynamic_polarizability(state: str, xi, data: Optional[AtomicData] = None):
    return (data or load_atomic_data()).dynamic_polarizability(state, xi)


def lattice_recoil_energy(period: float, data: Optional[AtomicData] = None) -> float:
    return (data or load_atomic_data()).lattice_recoil_energy(period)


# state labels used across the package
GROUND = "5S1/2"
EXCITED = "5P3/2"
STATE_ALIASES = {"5S": GROUND, "5P": EXCITED, GROUND: GROUND, EXCITED: EXCITED}


def canonical_state(label: str) -> str:
    try:
        return STATE_ALIASES[label]
    except KeyError:
        raise ConfigError(f"unknown atomic state '{label}' (use 5S or 5P)", section="atomic_data", key=label) from None
