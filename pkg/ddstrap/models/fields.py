"""
Numeric result containers shared by the tools.

Sampled quantities are numpy arrays in SI units; ``flags`` collects non-fatal
numerical warnings (quadrature tails, truncation, boundary values) that reports
and scan tables surface.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np


@dataclass
class IntensityProfile:
    """Vacuum-side intensity I(z) [W/m^2] under one plane-wave beam."""
    z: np.ndarray
    intensity: np.ndarray
    incident_intensity: float
    angle: float
    decay_constant: Optional[float] = None

    @property
    def peak(self) -> float:
        return float(self.intensity[0])

    @property
    def enhancement(self) -> float:
        return self.peak / self.incident_intensity


@dataclass
class IntensityMap:
    """I(x, z) on the vacuum side of a grating; axis 0 is x, axis 1 is z."""
    x: np.ndarray
    z: np.ndarray
    intensity: np.ndarray
    flags: List[str] = field(default_factory=list)

    @property
    def monotonic_columns(self) -> np.ndarray:
        return np.all(np.diff(self.intensity, axis=1) <= 0.0, axis=1)


@dataclass
class PotentialCurve:
    """Sampled U(z) [J] with grid metadata."""
    z: np.ndarray
    values: np.ndarray
    label: str = ""
    flags: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class PotentialMap:
    """Sampled U(x, z) [J]; axis 0 is x (one period), axis 1 is z."""
    x: np.ndarray
    z: np.ndarray
    values: np.ndarray
    period: float
    label: str = ""
    flags: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def column(self, x: float) -> PotentialCurve:
        """Potential of the column nearest to x (periodic)."""
        phase = np.mod(self.x - x + 0.5 * self.period, self.period) - 0.5 * self.period
        index = int(np.argmin(np.abs(phase)))
        return PotentialCurve(z=self.z, values=self.values[index], label=self.label,
                              flags=list(self.flags), metadata={**self.metadata, "x": float(self.x[index])})


@dataclass
class StatePotentials:
    """U_5S and U_5P (CP + optical) with their z-derivatives; 2D arrays when x-resolved."""
    z: np.ndarray
    u_5s: np.ndarray
    u_5p: np.ndarray
    du_5s: np.ndarray
    du_5p: np.ndarray
    x: Optional[np.ndarray] = None

    @classmethod
    def from_values(cls, z: np.ndarray, u_5s: np.ndarray, u_5p: np.ndarray, x: Optional[np.ndarray] = None):
        return cls(
            z=z,
            u_5s=u_5s,
            u_5p=u_5p,
            du_5s=np.gradient(u_5s, z, axis=-1),
            du_5p=np.gradient(u_5p, z, axis=-1),
            x=x,
        )


@dataclass
class CPResult:
    """Casimir-Polder energies [J] with quadrature diagnostics."""
    energy: np.ndarray
    tail_ratio: float = 0.0
    flags: List[str] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return bool(self.flags)


@dataclass
class BoundState:
    """Trap ground state from imaginary-time relaxation."""
    energy: float
    absolute_energy: float
    z: np.ndarray
    psi: np.ndarray
    delta_z: float
    delta_p: float
    energies: List[float] = field(default_factory=list)
    iterations: int = 0
