"""
1529 nm intensity nodes

Unit-power fields are memoized per geometry, wavelength, angle and grid, so
scans over powers and the front/back ratio only rescale them.
"""

import logging
import math

import numpy as np

from ..models.fields import IntensityMap, IntensityProfile
from ..models.schemas import RunConfig
from ..services.cache_service import cache_service
from ..tools.atomic_data import load_atomic_data
from ..tools.dressing import ac_stark_5p, detuning_from_wavelength
from ..tools.materials import load_materials
from ..tools.rcwa import grating_field_map, grating_spr_angle
from ..tools.stratified import field_intensity_profile, spr_angle

logger = logging.getLogger(__name__)


def dressing_grid(config: RunConfig) -> np.ndarray:
    grids = config.grids
    return np.geomspace(grids.z_min, grids.z_max, grids.n_z)


def lattice_x_grid(config: RunConfig) -> np.ndarray:
    period = config.grating.period
    return np.linspace(-0.5 * period, 0.5 * period, config.grids.n_x, endpoint=False)


def dressing_detuning(config: RunConfig, atomic) -> float:
    """Xi of the 1529 nm laser from 5P-4D: configured, or from the laser wavelength."""
    lasers = config.lasers
    if lasers.detuning_1529 is not None:
        return lasers.detuning_1529
    return detuning_from_wavelength(lasers.wavelength_1529, atomic.table.dressing.wavelength)


class OpticsNodes:
    """Nodes computing the dressing intensity and the optical 5P shift"""

    def __init__(self):
        self.atomic = load_atomic_data()
        self.library = load_materials()

    def _grid_key(self, config: RunConfig) -> tuple:
        grids = config.grids
        return grids.z_min, grids.z_max, grids.n_z

    def _optical_shift(self, config: RunConfig, intensity: np.ndarray) -> np.ndarray:
        xi = dressing_detuning(config, self.atomic)
        return ac_stark_5p(intensity, xi, self.atomic.atom.dressing_dipole)

    # =============================================================================
    # Planar stack
    # =============================================================================
    def _unit_profile(self, config: RunConfig, side: str, angle: float, z: np.ndarray) -> IntensityProfile:
        stack = config.surface
        lasers = config.lasers
        key = ("planar-intensity", stack.geometry_hash(), lasers.wavelength_1529, lasers.waist_1529, angle, side,
               self._grid_key(config))
        return cache_service.memo.get_or_compute(key, lambda: field_intensity_profile(
            stack, lasers.wavelength_1529, angle, 1.0, lasers.waist_1529, side=side, z=z, library=self.library,
        ))

    def compute_intensity(self, state) -> dict:
        """Back-illuminated (Kretschmann) intensity, plus the front beam when alpha_1529 > 0."""
        config: RunConfig = state["config"]
        lasers = config.lasers
        stack = config.surface
        z = dressing_grid(config)

        angle = lasers.angle_1529_back
        if angle is None:
            key = ("planar-spr", stack.geometry_hash(), lasers.wavelength_1529)
            angle = cache_service.memo.get_or_compute(
                key, lambda: spr_angle(stack, lasers.wavelength_1529, stack.substrate, self.library).angle
            )
            logger.info("SPR angle %.3f deg", math.degrees(angle))

        unit = self._unit_profile(config, "back", angle, z)
        intensity = lasers.power_1529_back * unit.intensity
        if lasers.alpha_1529 > 0:
            front = self._unit_profile(config, "front", lasers.angle_1529_front, z)
            intensity = intensity + lasers.alpha_1529 * lasers.power_1529_back * front.intensity

        profile = IntensityProfile(z=z, intensity=intensity, incident_intensity=lasers.power_1529_back * unit.incident_intensity,
                                   angle=angle, decay_constant=unit.decay_constant)
        logger.info("1529 nm intensity at z_min: %.3e W/m^2", profile.peak)
        return {
            "z": z,
            "spr_angle": angle,
            "intensity": profile,
            "u_5p_optical": self._optical_shift(config, intensity),
            "current_step": "compute_intensity",
        }

    # =============================================================================
    # Grating
    # =============================================================================
    def _unit_map(self, config: RunConfig, side: str, angle: float, x: np.ndarray, z: np.ndarray) -> IntensityMap:
        g = config.grating
        lasers = config.lasers
        truncation = config.rcwa.truncation
        key = ("grating-intensity", g.geometry_hash(), lasers.wavelength_1529, lasers.waist_1529, angle, side,
               truncation, len(x), self._grid_key(config))
        return cache_service.memo.get_or_compute(key, lambda: grating_field_map(
            g, lasers.wavelength_1529, side, 1.0, lasers.waist_1529, angle, truncation, x, z, self.library,
        ))

    def compute_grating_intensity(self, state) -> dict:
        """Time-averaged back + front intensity I(x, z) above the grating."""
        config: RunConfig = state["config"]
        lasers = config.lasers
        g = config.grating
        z = dressing_grid(config)
        x = lattice_x_grid(config)

        angle = lasers.angle_1529_back
        if angle is None:
            key = ("grating-spr", g.geometry_hash(), lasers.wavelength_1529, config.rcwa.truncation)
            angle = cache_service.memo.get_or_compute(
                key, lambda: grating_spr_angle(g, lasers.wavelength_1529, config.rcwa.truncation, library=self.library)
            )
            logger.info("grating SPR angle %.3f deg", math.degrees(angle))

        back = self._unit_map(config, "back", angle, x, z)
        intensity = lasers.power_1529_back * back.intensity
        flags = list(back.flags)
        if lasers.alpha_1529 > 0:
            front = self._unit_map(config, "front", lasers.angle_1529_front, x, z)
            intensity = intensity + lasers.alpha_1529 * lasers.power_1529_back * front.intensity
            flags += [f for f in front.flags if f not in flags]

        field_map = IntensityMap(x=x, z=z, intensity=intensity, flags=flags)
        if not np.all(field_map.monotonic_columns):
            field_map.flags.append("non-monotonic-columns")
            logger.warning("1529 nm intensity does not decay monotonically in every column")
        return {
            "z": z,
            "x": x,
            "spr_angle": angle,
            "intensity": field_map,
            "u_5p_optical": self._optical_shift(config, intensity),
            "current_step": "compute_grating_intensity",
        }
