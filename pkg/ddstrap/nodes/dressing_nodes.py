"""
Dressed-potential assembly and trap extraction nodes
"""

import logging
from typing import Optional

import numpy as np
from scipy import constants

from ..models.fields import PotentialCurve, PotentialMap, StatePotentials
from ..models.schemas import NoBarrierPositionError, RunConfig, TrapReport
from ..tools.atomic_data import EXCITED, GROUND, load_atomic_data
from ..tools.dressing import dressed_potential, rabi_from_power, trap_geometry_curve, trap_geometry_map

logger = logging.getLogger(__name__)

# U_5S at z_max above this (1 kHz) means the far boundary is not at the asymptote
FAR_BOUNDARY_TOLERANCE = constants.h * 1e3


class DressingNodes:
    """Nodes combining CP and optical shifts into the doubly-dressed ground-state potential"""

    def __init__(self):
        self.atomic = load_atomic_data()

    def rabi_frequency(self, config: RunConfig) -> float:
        lasers = config.lasers
        if lasers.rabi_frequency is not None:
            return lasers.rabi_frequency
        return rabi_from_power(lasers.power_780, lasers.waist_780, self.atomic.atom.d2_isotropic_dipole)

    def state_potentials(self, state) -> StatePotentials:
        cp = state["cp"]
        u_5s = np.asarray(cp[GROUND].values)
        u_5p = np.asarray(cp[EXCITED].values) + state["u_5p_optical"]
        return StatePotentials.from_values(state["z"], u_5s, u_5p, x=state.get("x"))

    def dress(self, state, delta0: Optional[float] = None) -> dict:
        config: RunConfig = state["config"]
        potentials = self.state_potentials(state)
        delta0 = config.lasers.detuning_780 if delta0 is None else delta0
        dressing = dressed_potential(potentials, delta0, self.rabi_frequency(config), self.atomic.atom.gamma0,
                                     state["u_5p_optical"], config.lasers.fold_cp_shift)
        far = np.max(np.abs(potentials.u_5s[..., -1]))
        if far > FAR_BOUNDARY_TOLERANCE:
            dressing["flags"].append("far-boundary")
        return {"potentials": potentials, "dressing": dressing}

    def cp_flags(self, state) -> list:
        return sorted({f for potential in state["cp"].values() for f in potential.flags})

    def _not_trapped(self, error: NoBarrierPositionError, step: str) -> dict:
        logger.info("No barrier position: %s", error.error_message)
        report = TrapReport(status="NT", flags=["no-barrier-position"], metadata={"reason": error.error_message})
        return {"report": report, "current_step": step}

    # =============================================================================
    # Planar
    # =============================================================================
    def assemble_potential(self, state) -> dict:
        try:
            result = self.dress(state)
        except NoBarrierPositionError as e:
            return self._not_trapped(e, "assemble_potential")
        dressing = result["dressing"]
        curve = PotentialCurve(z=state["z"], values=dressing["U"], label="U_total",
                               flags=list(dressing["flags"]) + self.cp_flags(state))
        logger.info("z_b = %.2f nm", dressing["z_b"] * 1e9)
        return {**result, "potential": curve, "current_step": "assemble_potential"}

    def extract_trap(self, state) -> dict:
        dressing = state["dressing"]
        report = trap_geometry_curve(state["potential"], dressing["z_b"], self.atomic.atom.mass, dressing["rho_ee"])
        if report.status == "OK":
            logger.info("Trap at z_t = %.2f nm, U0/h = %.3f MHz", report.z_t * 1e9, report.U0 / constants.h / 1e6)
        else:
            logger.info("Not trapped (%s)", ", ".join(report.flags))
        return {"report": report, "current_step": "extract_trap"}

    # =============================================================================
    # Lattice
    # =============================================================================
    def assemble_lattice_potential(self, state) -> dict:
        config: RunConfig = state["config"]
        try:
            result = self.dress(state)
        except NoBarrierPositionError as e:
            return self._not_trapped(e, "assemble_lattice_potential")
        dressing = result["dressing"]
        potential = PotentialMap(x=state["x"], z=state["z"], values=dressing["U"], period=config.grating.period,
                                 label="U_total",
                                 flags=list(dressing["flags"]) + list(state["intensity"].flags) + self.cp_flags(state))
        return {**result, "potential": potential, "current_step": "assemble_lattice_potential"}

    def ridge_index(self, state) -> int:
        x = state["x"]
        return int(np.argmin(np.abs(x)))

    def extract_lattice(self, state) -> dict:
        config: RunConfig = state["config"]
        dressing = state["dressing"]
        z_b = float(np.asarray(dressing["z_b"])[self.ridge_index(state)])
        if np.isnan(z_b):
            report = TrapReport(status="NT", flags=["no-barrier-position"], metadata={"reason": "no barrier above the ridge"})
            return {"report": report, "current_step": "extract_lattice"}
        report = trap_geometry_map(state["potential"], z_b, self.atomic.atom.mass, dressing["rho_ee"])
        recoil = self.atomic.lattice_recoil_energy(config.grating.period)
        report = report.model_copy(update={"lattice_recoil": recoil})
        if report.U_l is not None:
            logger.info("Lattice: U_l/h = %.3f MHz (%.1f E_R), status %s",
                        report.U_l / constants.h / 1e6, report.U_l / recoil, report.status)
        return {"report": report, "current_step": "extract_lattice"}
