"""
Ground-state and lifetime nodes
"""

import logging

import numpy as np
from scipy import constants

from ..models.schemas import NotTrappedError, RunConfig, TrapReport
from ..tools.atomic_data import load_atomic_data
from ..tools.dynamics import ground_state_itp, lifetime_budget

logger = logging.getLogger(__name__)


def _trap_profile(state):
    """U(z) through the trap (the ridge column for lattices) and the matching row index."""
    potential = state["potential"]
    values = np.asarray(potential.values)
    if values.ndim == 1:
        return potential.z, values, None
    row = int(np.argmin(np.abs(state["x"])))
    return potential.z, values[row], row


def itp_domain(z: np.ndarray, u: np.ndarray, report: TrapReport):
    """
    [barrier top, z_hi]: z_hi is where U first climbs back to U(z_t) + U0 beyond the trap,
    or the outer maximum.
    """
    i = report.metadata["index"]
    z_lo = z[int(np.argmax(u[:i]))]
    level = u[i] + report.U0
    outer = i + 1 + int(np.argmax(u[i + 1:]))
    above = np.nonzero(u[i + 1:outer + 1] >= level)[0]
    z_hi = z[i + 1 + int(above[0])] if above.size else z[outer]
    return float(z_lo), float(z_hi)


class DynamicsNodes:
    """Nodes for the bound state and the characteristic times"""

    def __init__(self):
        self.atomic = load_atomic_data()

    def solve_ground_state(self, state) -> dict:
        config: RunConfig = state["config"]
        report: TrapReport = state["report"]
        z, u, _ = _trap_profile(state)
        z_lo, z_hi = itp_domain(z, u, report)
        dynamics = config.dynamics
        try:
            bound = ground_state_itp(z, u, self.atomic.atom.mass, z_lo=z_lo, z_hi=z_hi, asymptote=float(u[-1]),
                                     omega=report.omega_z, spacing=dynamics.itp_spacing,
                                     tolerance=dynamics.itp_tolerance, max_iterations=dynamics.max_iterations)
        except NotTrappedError as e:
            logger.info("No bound state: %s", e.error_message)
            failed = report.model_copy(update={"status": "NT", "flags": report.flags + ["no-bound-state"]})
            return {"report": failed, "current_step": "solve_ground_state"}

        logger.info("Ground state E_g/h = %.3f MHz after %d ITP steps", bound.energy / constants.h / 1e6, bound.iterations)
        updated = report.model_copy(update={"E_g": bound.energy, "delta_z": bound.delta_z, "delta_p": bound.delta_p})
        return {"bound_state": bound, "report": updated, "current_step": "solve_ground_state"}

    def lifetime_budget(self, state) -> dict:
        config: RunConfig = state["config"]
        report: TrapReport = state["report"]
        dressing = state["dressing"]
        potentials = state["potentials"]
        z, u, row = _trap_profile(state)

        def at_trap(values):
            values = np.asarray(values)
            return float(np.interp(report.z_t, z, values if row is None else values[row]))

        delta = np.asarray(dressing["delta"])
        ddelta = np.gradient(delta, z, axis=-1)
        atom = self.atomic.atom
        budget = lifetime_budget(
            state["bound_state"], z, u, report.z_t, report.omega_z,
            rho_ee=at_trap(dressing["rho_ee"]),
            delta=at_trap(delta),
            ddelta=at_trap(ddelta),
            du_5p=at_trap(potentials.du_5p),
            gamma0=atom.gamma0,
            k0=atom.k0,
            mass=atom.mass,
            k_eff=config.dynamics.k_eff,
            energy_reference=config.dynamics.tunnel_energy_reference,
        )
        logger.info("Lifetime %.3e s (out %.3e, tunnel 10^%.1f, anti-damping %.3e)",
                    budget.tau, budget.tau_out, budget.log10_tau_tunnel, budget.tau_antidamping)
        return {"report": report.model_copy(update={"lifetime": budget}), "current_step": "lifetime_budget"}
