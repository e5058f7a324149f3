"""
Trap ground state and lifetime budget.

The ground state comes from imaginary-time split-step relaxation on a uniform grid
bounded by the barrier top and the outer edge (sine basis, zero at both ends), so
tunneling never enters it; the WKB exponent accounts for tunneling separately.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import constants, fft, integrate, interpolate

from ..models.fields import BoundState
from ..models.schemas import DomainError, LifetimeBudget, NotTrappedError, NumericalError

logger = logging.getLogger(__name__)

HBAR = constants.hbar
DT_SCHEDULE = (0.2, 0.05, 0.01)


# =============================================================================
# Ground state
# =============================================================================
def _curvature_frequency(grid: np.ndarray, v: np.ndarray, index: int, mass: float, half_width: int = 5) -> float:
    lo, hi = max(0, index - half_width), min(len(grid), index + half_width + 1)
    a = np.polyfit(grid[lo:hi] - grid[index], v[lo:hi], 2)[0]
    if not a > 0:
        raise NotTrappedError("potential has no curvature at its minimum", {"z": float(grid[index])})
    return math.sqrt(2.0 * a / mass)


def ground_state_itp(z: np.ndarray, u: np.ndarray, mass: float, z_lo: Optional[float] = None,
                     z_hi: Optional[float] = None, asymptote: Optional[float] = None,
                     omega: Optional[float] = None, spacing: float = 0.05e-9, tolerance: float = 1e-12,
                     max_iterations: int = 400000, schedule: Sequence[float] = DT_SCHEDULE) -> BoundState:
    """
    Lowest eigenstate of -(hbar^2/2m) d^2/dz^2 + U(z) on [z_lo, z_hi].

    Args:
        z, u: potential samples [m], [J]; resampled monotonically (PCHIP) onto the ITP grid
        z_lo, z_hi: domain ends (default: the sample range); the wavefunction vanishes there
        asymptote: reference for E_g (default: U at the last sample)
        omega: characteristic angular frequency setting the steps dtau = f / omega
        tolerance: relative energy change per step that ends each dtau stage

    Raises:
        NotTrappedError: no convergence or energy above the lower domain edge
    """
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    z_lo = float(z[0]) if z_lo is None else float(z_lo)
    z_hi = float(z[-1]) if z_hi is None else float(z_hi)
    if not z_hi - z_lo > 8 * spacing:
        raise DomainError("ITP domain is narrower than the grid spacing allows", {"z_lo": z_lo, "z_hi": z_hi})
    asymptote = float(u[-1]) if asymptote is None else float(asymptote)

    n = int(round((z_hi - z_lo) / spacing)) - 1
    length = z_hi - z_lo
    grid = z_lo + length * np.arange(1, n + 1) / (n + 1)
    potential = interpolate.PchipInterpolator(z, u)
    v = potential(grid)
    walls = float(min(potential(z_lo), potential(z_hi)))

    i0 = int(np.argmin(v))
    v_min = float(v[i0])
    shifted = v - v_min
    wavenumbers = math.pi * np.arange(1, n + 1) / length
    kinetic = HBAR ** 2 * wavenumbers ** 2 / (2.0 * mass)
    if omega is None:
        omega = _curvature_frequency(grid, v, i0, mass)

    sigma = math.sqrt(HBAR / (2.0 * mass * omega))
    psi = np.exp(-((grid - grid[i0]) ** 2) / (4.0 * sigma ** 2))
    psi /= np.linalg.norm(psi)

    def energy(state: np.ndarray) -> float:
        coeffs = fft.dst(state, type=1, norm="ortho")
        return float(np.sum(kinetic * coeffs ** 2) + np.sum(shifted * state ** 2))

    energies = []
    iterations = 0
    current = energy(psi)
    for fraction in schedule:
        dtau = fraction / omega
        half = np.exp(-shifted * dtau / (2.0 * HBAR))
        propagator = np.exp(-kinetic * dtau / HBAR)
        converged = False
        while iterations < max_iterations:
            psi = half * psi
            psi = fft.idst(fft.dst(psi, type=1, norm="ortho") * propagator, type=1, norm="ortho")
            psi *= half
            norm = np.linalg.norm(psi)
            if not np.isfinite(norm) or norm == 0.0:
                raise NumericalError("imaginary-time propagation diverged", {"iterations": iterations})
            psi /= norm
            previous, current = current, energy(psi)
            energies.append(current + v_min)
            iterations += 1
            if abs(previous - current) <= tolerance * abs(current):
                converged = True
                break
        if not converged:
            raise NotTrappedError("imaginary-time propagation did not converge", {"iterations": iterations})
        logger.debug("ITP stage dtau=%.3g/omega converged after %d steps", fraction, iterations)

    e0 = current + v_min
    if e0 >= walls:
        raise NotTrappedError("no bound state below the barrier", {"energy": e0, "barrier": walls})

    prob = psi ** 2
    mean_z = float(np.sum(prob * grid))
    delta_z = math.sqrt(float(np.sum(prob * (grid - mean_z) ** 2)))
    coeffs = fft.dst(psi, type=1, norm="ortho")
    delta_p = HBAR * math.sqrt(float(np.sum(wavenumbers ** 2 * coeffs ** 2)))

    step = length / (n + 1)
    return BoundState(
        energy=e0 - asymptote,
        absolute_energy=e0,
        z=grid,
        psi=psi / math.sqrt(step),
        delta_z=delta_z,
        delta_p=delta_p,
        energies=energies,
        iterations=iterations,
    )


# =============================================================================
# Characteristic times
# =============================================================================
def wkb_exponent(z: np.ndarray, u: np.ndarray, energy: float, mass: float, samples: int = 20001) -> float:
    """
    S = 2 int sqrt(2m(U - E)) / hbar dz over the forbidden interval around the highest point of U.

    Turning points are located by linear interpolation on a fine PCHIP resampling.
    Returns 0 when U never exceeds E.
    """
    fine = np.linspace(z[0], z[-1], samples)
    potential = interpolate.PchipInterpolator(z, u)
    excess = potential(fine) - energy
    top = int(np.argmax(excess))
    if excess[top] <= 0:
        return 0.0
    lo = top
    while lo > 0 and excess[lo - 1] > 0:
        lo -= 1
    hi = top
    while hi < samples - 1 and excess[hi + 1] > 0:
        hi += 1
    left = fine[lo] if lo == 0 else np.interp(0.0, [excess[lo - 1], excess[lo]], [fine[lo - 1], fine[lo]])
    right = fine[hi] if hi == samples - 1 else np.interp(0.0, [excess[hi + 1], excess[hi]], [fine[hi + 1], fine[hi]])

    nodes = np.linspace(left, right, samples)
    integrand = np.sqrt(2.0 * mass * np.clip(potential(nodes) - energy, 0.0, None)) / HBAR
    return 2.0 * float(integrate.trapezoid(integrand, nodes))


def tau_tunnel(z: np.ndarray, u: np.ndarray, z_t: float, energy: float, omega: float,
               mass: float) -> Tuple[float, float, list]:
    """
    Tunneling time toward the surface, attempt rate omega / 2pi at the trap minimum.

    Returns:
        (tau [s], log10 tau, flags); tau = 0 and flag 'no-forbidden-region' without a barrier
    """
    inner = z <= z_t
    exponent = wkb_exponent(z[inner], u[inner], energy, mass)
    if exponent == 0.0:
        return 0.0, -math.inf, ["no-forbidden-region"]
    log10_tau = exponent / math.log(10.0) - math.log10(omega / (2.0 * math.pi))
    tau = 10.0 ** log10_tau if log10_tau < 300 else math.inf
    return tau, log10_tau, []


def tau_out(gamma_sc: float, e_g: float, k_eff: float, mass: float) -> float:
    """Exit time |E_g| / (dE/dt), heating rate dE/dt = (hbar k_eff)^2 / 2m * Gamma_sc."""
    if gamma_sc <= 0:
        return math.inf
    return abs(e_g) / (HBAR ** 2 * k_eff ** 2 / (2.0 * mass) * gamma_sc)


def antidamping_rate(delta: float, ddelta: float, du_5p: float, gamma_sc: float, gamma0: float,
                     k0: float, mass: float) -> float:
    """
    Blue-transition anti-damping rate [1/s].

    beta = -4 omega_r Delta Gamma_sc dU_5P/dz dDelta/dz / (hbar k0^2 |Delta_c|^4), with dU_5P/dz
    an energy gradient [J/m] and Delta_c = Delta + i Gamma0 / 2.
    """
    omega_r = HBAR * k0 ** 2 / (2.0 * mass)
    delta_c4 = (delta ** 2 + 0.25 * gamma0 ** 2) ** 2
    return -4.0 * omega_r * delta * gamma_sc * du_5p * ddelta / (HBAR * k0 ** 2 * delta_c4)


def tau_antidamping(beta: float, e_g: float, delta_p: float, mass: float) -> float:
    if beta <= 0:
        return math.inf
    kinetic = delta_p ** 2 / (2.0 * mass)
    return math.log((abs(e_g) + kinetic) / kinetic) / (2.0 * beta)


def tau_adiabatic(delta_z: float, delta_p: float, mass: float) -> float:
    return mass * delta_z / delta_p


def combined_lifetime(*times: float) -> float:
    rate = sum(0.0 if math.isinf(t) else 1.0 / t for t in times)
    return math.inf if rate == 0 else 1.0 / rate


def lifetime_budget(bound: BoundState, z: np.ndarray, u: np.ndarray, z_t: float, omega_z: float,
                    rho_ee: float, delta: float, ddelta: float, du_5p: float, gamma0: float, k0: float,
                    mass: float, k_eff: Optional[float] = None,
                    energy_reference: str = "trap_minimum") -> LifetimeBudget:
    """
    Gamma_sc = Gamma0 rho_ee(z_t), the four characteristic times and their harmonic combination.

    ``energy_reference`` picks the tunneling energy: the ITP eigenvalue ('trap_minimum') or
    U(z_t) + |E_g| ('asymptote').
    """
    if energy_reference not in ("trap_minimum", "asymptote"):
        raise DomainError(f"unknown tunneling energy reference '{energy_reference}'")
    gamma_sc = gamma0 * rho_ee
    k_eff = k0 if k_eff is None else k_eff
    flags = []

    t_out = tau_out(gamma_sc, bound.energy, k_eff, mass)

    u_t = float(np.interp(z_t, z, u))
    level = bound.absolute_energy if energy_reference == "trap_minimum" else u_t + abs(bound.energy)
    t_tunnel, log10_tunnel, tunnel_flags = tau_tunnel(np.asarray(z), np.asarray(u), z_t, level, omega_z, mass)
    flags.extend(tunnel_flags)

    beta = antidamping_rate(delta, ddelta, du_5p, gamma_sc, gamma0, k0, mass)
    logger.info("anti-damping rate beta=%.4e 1/s", beta)
    t_ad = tau_antidamping(beta, bound.energy, bound.delta_p, mass)
    if beta <= 0:
        flags.append("damping-side")

    t_a = tau_adiabatic(bound.delta_z, bound.delta_p, mass)
    if t_tunnel == 0.0:
        tau = 0.0
    else:
        tau = combined_lifetime(t_out, t_ad, t_tunnel)
    return LifetimeBudget(
        tau_out=t_out,
        tau_tunnel=t_tunnel,
        log10_tau_tunnel=log10_tunnel,
        tau_antidamping=t_ad,
        tau_adiabatic=t_a,
        gamma_sc=gamma_sc,
        beta=beta,
        tau=tau,
        flags=flags,
    )
