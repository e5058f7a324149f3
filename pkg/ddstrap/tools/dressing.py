"""
Doubly-dressed-state potential.

The 1529 nm light shifts 5P upwards, making the 780 nm detuning position dependent:
    Delta(z) = Delta0 - (U_5P(z) - U_5S(z)) / hbar          (fold_cp_shift)
    Delta(z) = Delta0 - U_5P,opt(z) / hbar                  (otherwise)
The steady-state populations of the 780 nm two-level system weight the state
forces, and the total potential is accumulated inward from the far boundary.
Arrays may be 1D (z) or 2D (x, z); z is always the last axis.
"""

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import constants, optimize

from ..models.fields import PotentialCurve, PotentialMap, StatePotentials
from ..models.schemas import DomainError, NoBarrierPositionError, NotTrappedError, NumericalError, TrapReport

logger = logging.getLogger(__name__)

HBAR = constants.hbar


# =============================================================================
# Light shifts and Rabi frequencies
# =============================================================================
def rabi_squared(intensity, dipole: float):
    """Omega^2 = 2 d^2 I / (eps0 c hbar^2) for a running wave of intensity I."""
    return 2.0 * dipole ** 2 * np.asarray(intensity, dtype=float) / (constants.epsilon_0 * constants.c * HBAR ** 2)


def ac_stark_5p(intensity, detuning: float, dipole: float):
    """
    Light shift [J] of 5P from the 5P-4D coupling (strong-field two-level form).

    Positive (repulsive) on the blue side; hbar Omega^2 / (4 Xi) in the weak-field limit.
    """
    if detuning == 0:
        raise DomainError("1529 nm detuning must be non-zero")
    omega_sq = rabi_squared(intensity, dipole)
    xi = abs(detuning)
    # sqrt(xi^2 + W^2) - xi without cancellation
    shift = omega_sq / (np.sqrt(xi ** 2 + omega_sq) + xi)
    return 0.5 * HBAR * math.copysign(1.0, detuning) * shift


def detuning_from_wavelength(laser_wavelength: float, line_wavelength: float) -> float:
    """Xi = w_L - w_line [rad/s]; positive when the laser is blue of the line."""
    return 2.0 * math.pi * constants.c * (1.0 / laser_wavelength - 1.0 / line_wavelength)


def rabi_from_power(power: float, waist: float, dipole: float) -> float:
    """
    Homogeneous 780 nm Rabi frequency [rad/s], Omega_R = d E0 / hbar.

    E0 = sqrt(2 I / (eps0 c)) is the peak field of the Gaussian beam, I = 2P / (pi w^2).
    """
    if power < 0 or not waist > 0:
        raise DomainError("780 nm power must be >= 0 and waist > 0", {"power": power, "waist": waist})
    intensity = 2.0 * power / (math.pi * waist ** 2)
    e_peak = math.sqrt(2.0 * intensity / (constants.epsilon_0 * constants.c))
    return dipole * e_peak / HBAR


# =============================================================================
# Detuning and populations
# =============================================================================
def detuning_profile(potentials: StatePotentials, delta0: float, u_5p_optical: Optional[np.ndarray] = None,
                     fold_cp_shift: bool = True) -> np.ndarray:
    """Delta(z) [rad/s]; without folding, ``u_5p_optical`` is required."""
    if fold_cp_shift:
        return delta0 - (potentials.u_5p - potentials.u_5s) / HBAR
    if u_5p_optical is None:
        raise DomainError("the optical 5P shift is required when the CP shift is not folded into Delta(z)")
    return delta0 - np.asarray(u_5p_optical) / HBAR


def barrier_position(z: np.ndarray, delta: np.ndarray) -> float:
    """
    z_b: first +/- sign change of Delta(z) met when moving in from the far boundary.

    Raises:
        NoBarrierPositionError: Delta keeps one sign (or is negative far from the surface)
    """
    z = np.asarray(z, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if delta[-1] <= 0:
        raise NoBarrierPositionError("detuning is not blue at the far boundary", {"delta_far": float(delta[-1])})
    negative = np.nonzero(delta <= 0)[0]
    if negative.size == 0:
        raise NoBarrierPositionError("detuning never crosses zero", {"delta_min": float(delta.min())})
    i = int(negative[-1])
    if delta[i] == 0:
        return float(z[i])
    return float(optimize.brentq(lambda x: np.interp(x, z[i:i + 2], delta[i:i + 2]), z[i], z[i + 1]))


def bloch_steady_state(rabi, delta, gamma: float) -> Tuple[np.ndarray, np.ndarray]:
    """Two-level steady state (rho_gg, rho_ee) with rho_ee = (W^2/4) / (D^2 + W^2/2 + G^2/4)."""
    if not gamma > 0:
        raise DomainError("natural linewidth must be > 0", {"gamma": gamma})
    rabi = np.asarray(rabi, dtype=float)
    delta = np.asarray(delta, dtype=float)
    rho_ee = 0.25 * rabi ** 2 / (delta ** 2 + 0.5 * rabi ** 2 + 0.25 * gamma ** 2)
    return 1.0 - rho_ee, rho_ee


def total_potential(potentials: StatePotentials, rho_ee, far_tolerance: Optional[float] = None) -> Tuple[np.ndarray, list]:
    """
    Population-weighted potential, integrated inward from z_max.

    Each step uses trapezoid-averaged populations against the state-potential
    increments, starting from rho_gg U_5S + rho_ee U_5P at z_max, so that
    rho_ee = 0 (1) returns U_5S (U_5P) exactly.

    Returns:
        (U, flags); 'far-boundary' when |U_5S(z_max)| exceeds ``far_tolerance``
    """
    rho_ee = np.broadcast_to(np.asarray(rho_ee, dtype=float), np.shape(potentials.u_5s))
    rho_gg = 1.0 - rho_ee
    mean_ee = 0.5 * (rho_ee[..., 1:] + rho_ee[..., :-1])
    mean_gg = 0.5 * (rho_gg[..., 1:] + rho_gg[..., :-1])
    increments = mean_ee * np.diff(potentials.u_5p, axis=-1) + mean_gg * np.diff(potentials.u_5s, axis=-1)
    boundary = rho_gg[..., -1] * potentials.u_5s[..., -1] + rho_ee[..., -1] * potentials.u_5p[..., -1]
    tail = np.cumsum(increments[..., ::-1], axis=-1)[..., ::-1]
    values = np.concatenate([boundary[..., None] - tail, boundary[..., None]], axis=-1)
    flags = []
    if far_tolerance is not None and np.max(np.abs(potentials.u_5s[..., -1])) > far_tolerance:
        flags.append("far-boundary")
        logger.warning("CP potential at z_max exceeds %.3e J", far_tolerance)
    return values, flags


def equilibrium_residual(potentials: StatePotentials, rho_ee, index: int) -> float:
    """rho_ee U_5P' + rho_gg U_5S' at one grid index of a 1D profile [N]."""
    rho = float(np.asarray(rho_ee)[index])
    return float(rho * potentials.du_5p[index] + (1.0 - rho) * potentials.du_5s[index])


# =============================================================================
# Trap geometry
# =============================================================================
def _quadratic_vertex(x: np.ndarray, y: np.ndarray, i: int) -> Tuple[float, Optional[float]]:
    """Vertex position and curvature a of a quadratic fit over i-2..i+2."""
    lo, hi = max(0, i - 2), min(len(x), i + 3)
    if hi - lo < 3:
        return float(x[i]), None
    a, b, _ = np.polyfit(x[lo:hi] - x[i], y[lo:hi], 2)
    if not a > 0:
        return float(x[i]), None
    vertex = x[i] - b / (2.0 * a)
    if not (x[lo] <= vertex <= x[hi - 1]):
        vertex = x[i]
    return float(vertex), float(a)


def trap_minimum_index(z: np.ndarray, u: np.ndarray, z_b: float) -> int:
    """Deepest interior local minimum beyond z_b."""
    interior = np.arange(1, len(z) - 1)
    is_min = (u[interior] < u[interior - 1]) & (u[interior] <= u[interior + 1]) & (z[interior] > z_b)
    candidates = interior[is_min]
    if candidates.size == 0:
        raise NotTrappedError("no local minimum beyond the barrier position", {"z_b": z_b})
    return int(candidates[np.argmin(u[candidates])])


def trap_geometry_curve(curve: PotentialCurve, z_b: float, mass: float,
                        rho_ee: Optional[np.ndarray] = None) -> TrapReport:
    """
    Trap position, barrier height, depth and axial frequency of a 1D potential.

    U_b is the inner barrier above U(z_t); U0 the lower of the inner barrier and the
    outer escape (outer maximum or the far-boundary value). Untrapped curves give status NT.
    """
    z, u = np.asarray(curve.z, dtype=float), np.asarray(curve.values, dtype=float)
    try:
        i = trap_minimum_index(z, u, z_b)
    except NotTrappedError:
        return TrapReport(status="NT", z_b=z_b, flags=list(curve.flags) + ["no-minimum"])
    u_t = u[i]
    u_b = float(np.max(u[:i]) - u_t)
    outer = float(np.max(u[i + 1:]) - u_t)
    u0 = min(u_b, outer)
    if not u0 > 0:
        return TrapReport(status="NT", z_b=z_b, flags=list(curve.flags) + ["no-barrier"])
    z_t, a = _quadratic_vertex(z, u, i)
    omega_z = math.sqrt(2.0 * a / mass) if a else None
    return TrapReport(
        status="OK", z_b=z_b, z_t=z_t, U0=u0, U_b=u_b, omega_z=omega_z,
        rho_ee=float(np.interp(z_t, z, rho_ee)) if rho_ee is not None else None,
        flags=list(curve.flags), metadata={"index": i, "U_t": float(u_t)},
    )


def trap_geometry_map(potential: PotentialMap, z_b: float, mass: float, rho_ee: Optional[np.ndarray] = None,
                      npm_threshold: float = constants.h * 1e3) -> TrapReport:
    """
    Lattice characterization: ridge column (x = 0) trap plus lattice depth and transverse frequency.

    U_l = min(groove column) - min(ridge column), using the groove value at z_t when the
    groove column has no minimum. U_l below ``npm_threshold`` gives status NPM.
    """
    ridge = potential.column(0.0)
    groove = potential.column(0.5 * potential.period)
    ridge_rho = None
    if rho_ee is not None:
        ridge_rho = np.asarray(rho_ee)[_column_index(potential, 0.0)]
    report = trap_geometry_curve(ridge, z_b, mass, ridge_rho)
    if report.status != "OK":
        return report
    i = report.metadata["index"]
    u_ridge = report.metadata["U_t"]
    try:
        j = trap_minimum_index(groove.z, groove.values, z_b)
        u_groove = float(groove.values[j])
    except NotTrappedError:
        u_groove = float(groove.values[i])
    u_l = u_groove - u_ridge

    # transverse fit on the z_t row, periodic in x
    row = potential.values[:, i]
    ix = _column_index(potential, 0.0)
    idx = (ix + np.arange(-2, 3)) % len(potential.x)
    xs = np.arange(-2, 3) * (potential.period / len(potential.x))
    a = np.polyfit(xs, row[idx], 2)[0]
    omega_x = math.sqrt(2.0 * a / mass) if a > 0 else None

    update = {"U_l": u_l, "omega_x": omega_x}
    if u_l < npm_threshold:
        update["status"] = "NPM"
        update["flags"] = report.flags + ["no-transverse-modulation"]
    return report.model_copy(update=update)


def _column_index(potential: PotentialMap, x: float) -> int:
    phase = np.mod(potential.x - x + 0.5 * potential.period, potential.period) - 0.5 * potential.period
    return int(np.argmin(np.abs(phase)))


# =============================================================================
# Assembly
# =============================================================================
def dressed_potential(potentials: StatePotentials, delta0: float, rabi: float, gamma: float,
                      u_5p_optical: Optional[np.ndarray] = None, fold_cp_shift: bool = True):
    """
    Delta(z), z_b, populations and U for one Delta0 (1D) or per column (2D).

    Returns:
        dict with 'delta', 'z_b' (float, or per-column array with NaN where Delta keeps one sign),
        'rho_ee', 'U', 'flags'
    """
    delta = detuning_profile(potentials, delta0, u_5p_optical, fold_cp_shift)
    if delta.ndim == 1:
        z_b = barrier_position(potentials.z, delta)
    else:
        z_b = np.array([_column_barrier(potentials.z, row) for row in delta])
        if np.all(np.isnan(z_b)):
            raise NoBarrierPositionError("detuning never crosses zero in any column")
    _, rho_ee = bloch_steady_state(rabi, delta, gamma)
    u, flags = total_potential(potentials, rho_ee)
    return {"delta": delta, "z_b": z_b, "rho_ee": rho_ee, "U": u, "flags": flags}


def _column_barrier(z: np.ndarray, delta: np.ndarray) -> float:
    try:
        return barrier_position(z, delta)
    except NoBarrierPositionError:
        return math.nan


def solve_detuning_for_position(trap_position: Callable[[float], Optional[float]], target: float,
                                bracket: Tuple[float, float], tolerance: float = 1e-3 * 2 * math.pi * 1e6) -> float:
    """
    Delta0 giving a trap at ``target``; ``trap_position(delta0)`` returns z_t or None when untrapped.

    z_t moves away from the surface as Delta0 decreases, so the bracket is scanned for a sign change
    before the root is polished with brentq.
    """
    grid = np.linspace(bracket[0], bracket[1], 33)
    values = []
    for d in grid:
        z_t = trap_position(float(d))
        values.append(np.nan if z_t is None else z_t - target)
    values = np.asarray(values)
    for k in range(len(grid) - 1):
        a, b = values[k], values[k + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b <= 0:
            def residual(d):
                z_t = trap_position(float(d))
                if z_t is None:
                    raise NotTrappedError("trap lost while solving for the detuning", {"delta0": d})
                return z_t - target
            try:
                return float(optimize.brentq(residual, grid[k], grid[k + 1], xtol=tolerance))
            except ValueError as e:
                raise NumericalError(f"detuning root search failed: {e}", {"bracket": [grid[k], grid[k + 1]]}) from e
    raise NotTrappedError("no detuning in the bracket places the trap at the target",
                          {"target": target, "bracket": list(bracket)})
