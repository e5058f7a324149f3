"""
Planar multilayer optics.

Reflection and transmission of plane waves by a ``LayerStack`` on the real
frequency axis (laser optics, resonant Casimir-Polder term) and on the imaginary
axis (non-resonant Casimir-Polder term), intensity profiles under back
(Kretschmann) or front illumination, and the SPR angle.

Conventions:
    - k_z = sqrt(eps k0^2 - k_par^2) with Im k_z >= 0 (Re k_z >= 0 on ties).
    - s waves: amplitudes of E_y; p waves: amplitudes of H_y, so a perfect mirror
      has r_s = -1 and r_p = +1.
    - on the imaginary axis k0^2 = -xi^2 / c^2 and all coefficients are real.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import numpy as np
from scipy import constants, optimize
from scipy.integrate import quad_vec

from ..models.fields import IntensityProfile
from ..models.schemas import ConfigError, DomainError, LayerStack, NoSPRFoundError
from .materials import MaterialLibrary, load_materials

logger = logging.getLogger(__name__)

Axis = Literal["real", "imaginary"]
Polarization = Literal["s", "p"]


@dataclass(frozen=True)
class PlaneWaveQuery:
    """One plane wave: frequency axis and value [rad/s], k_parallel [1/m], polarization."""
    axis: Axis
    frequency: float
    k_parallel: float
    polarization: Polarization

    def __post_init__(self):
        if self.axis not in ("real", "imaginary"):
            raise DomainError(f"unknown frequency axis '{self.axis}'")
        if self.polarization not in ("s", "p"):
            raise DomainError(f"unknown polarization '{self.polarization}'")
        if self.frequency < 0 or self.k_parallel < 0:
            raise DomainError("frequency and k_parallel must be >= 0")


def kz_branch(arg):
    """Square root on the Im >= 0 sheet, Re >= 0 when purely real."""
    kz = np.sqrt(np.asarray(arg, dtype=complex))
    flip = (kz.imag < 0) | ((kz.imag == 0) & (kz.real < 0))
    return np.where(flip, -kz, kz)


def vacuum_k0_squared(axis: Axis, frequency):
    f = np.asarray(frequency, dtype=float)
    return (f / constants.c) ** 2 if axis == "real" else -(f / constants.c) ** 2


def layer_permittivities(stack: LayerStack, axis: Axis, frequency,
                         library: Optional[MaterialLibrary] = None) -> List[np.ndarray]:
    """Permittivity of every medium (incidence, layers..., substrate) at the given frequencies."""
    library = library or load_materials()
    eps = []
    for name in stack.materials():
        if axis == "real":
            eps.append(np.asarray(library.permittivity(name, frequency), dtype=complex))
        else:
            eps.append(np.asarray(library.permittivity_imag_axis(name, frequency), dtype=complex))
    return eps


def _interface(polarization: Polarization, eps1, eps2, kz1, kz2):
    """Single-interface r and t of the continuous tangential field."""
    if polarization == "s":
        denom = kz1 + kz2
        return (kz1 - kz2) / denom, 2.0 * kz1 / denom
    denom = eps2 * kz1 + eps1 * kz2
    return (eps2 * kz1 - eps1 * kz2) / denom, 2.0 * eps2 * kz1 / denom


def stack_response(stack: LayerStack, k0_sq, eps: List[np.ndarray], k_parallel_sq, polarization: Polarization):
    """
    Airy recursion from the substrate up.

    Args:
        stack: the multilayer (only thicknesses are read; media enter through ``eps``)
        k0_sq: vacuum k0^2 (negative on the imaginary axis)
        eps: permittivities of all media, incidence first
        k_parallel_sq: k_par^2, broadcastable against ``k0_sq``
        polarization: 's' or 'p'

    Returns:
        (r, t, kz): reflection and tangential-field transmission amplitudes and the
        list of k_z per medium
    """
    kz = [kz_branch(e * k0_sq - k_parallel_sq) for e in eps]
    thickness = [layer.thickness for layer in stack.layers]
    n_media = len(eps)

    r_tot, t_tot = _interface(polarization, eps[-2], eps[-1], kz[-2], kz[-1])
    for j in range(n_media - 3, -1, -1):
        phase = np.exp(1j * kz[j + 1] * thickness[j])
        r_j, t_j = _interface(polarization, eps[j], eps[j + 1], kz[j], kz[j + 1])
        denom = 1.0 + r_j * r_tot * phase ** 2
        t_tot = t_j * t_tot * phase / denom
        r_tot = (r_j + r_tot * phase ** 2) / denom
    return r_tot, t_tot, kz


def reflection_coefficients(stack: LayerStack, axis: Axis, frequency, k_parallel_sq,
                            library: Optional[MaterialLibrary] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(r_s, r_p) vectorized over broadcastable frequency and k_par^2 arrays."""
    eps = layer_permittivities(stack, axis, frequency, library)
    k0_sq = vacuum_k0_squared(axis, frequency)
    r_s, _, _ = stack_response(stack, k0_sq, eps, k_parallel_sq, "s")
    r_p, _, _ = stack_response(stack, k0_sq, eps, k_parallel_sq, "p")
    if axis == "imaginary":
        return r_s.real, r_p.real
    return r_s, r_p


def reflection_coefficient(stack: LayerStack, query: PlaneWaveQuery,
                           library: Optional[MaterialLibrary] = None) -> complex:
    eps = layer_permittivities(stack, query.axis, query.frequency, library)
    k0_sq = vacuum_k0_squared(query.axis, query.frequency)
    r, _, _ = stack_response(stack, k0_sq, eps, query.k_parallel ** 2, query.polarization)
    return complex(r)


def transmission_coefficient(stack: LayerStack, query: PlaneWaveQuery,
                             library: Optional[MaterialLibrary] = None) -> complex:
    """E-field amplitude transmission into the substrate (unit polarization vectors)."""
    eps = layer_permittivities(stack, query.axis, query.frequency, library)
    k0_sq = vacuum_k0_squared(query.axis, query.frequency)
    _, t, _ = stack_response(stack, k0_sq, eps, query.k_parallel ** 2, query.polarization)
    if query.polarization == "p":
        t = t * np.sqrt(eps[0]) / np.sqrt(eps[-1])
    return complex(t)


def reflectance_transmittance(stack: LayerStack, wavelength: float, angle: float, polarization: Polarization,
                              library: Optional[MaterialLibrary] = None) -> Tuple[float, float]:
    """Power R and T for a plane wave from the incidence medium at ``angle``."""
    omega = 2.0 * math.pi * constants.c / wavelength
    eps = layer_permittivities(stack, "real", omega, library)
    k0 = omega / constants.c
    n_in = np.sqrt(eps[0])
    k_par = (n_in * k0 * math.sin(angle)).real
    r, t, kz = stack_response(stack, k0 ** 2, eps, k_par ** 2, polarization)
    if polarization == "p":
        # flux of H-field amplitudes carries Re(kz / eps)
        ratio = (kz[-1] / eps[-1]).real / (kz[0] / eps[0]).real
    else:
        ratio = kz[-1].real / kz[0].real
    return float(abs(r) ** 2), float(abs(t) ** 2 * ratio)


def reflectance_curve(stack: LayerStack, wavelength: float, angles: np.ndarray, polarization: Polarization = "p",
                      library: Optional[MaterialLibrary] = None) -> np.ndarray:
    omega = 2.0 * math.pi * constants.c / wavelength
    eps = layer_permittivities(stack, "real", omega, library)
    k0 = omega / constants.c
    k_par = (np.sqrt(eps[0]) * k0).real * np.sin(np.asarray(angles))
    r, _, _ = stack_response(stack, k0 ** 2, eps, k_par ** 2, polarization)
    return np.abs(r) ** 2


# =============================================================================
# SPR angle
# =============================================================================
@dataclass
class SPRResult:
    angle: float
    n_eff: float
    reflectance: float
    dip_depth: float


def _oriented_stack(stack: LayerStack, incidence: str) -> LayerStack:
    if incidence == stack.incidence:
        return stack
    if incidence == stack.substrate:
        return stack.reversed()
    raise ConfigError(
        f"incidence material '{incidence}' is neither side of the stack ({stack.incidence} / {stack.substrate})",
        section="surface", key="incidence",
    )


def find_reflectance_dip(reflectance, angle_min: float, angle_max: float, n_grid: int = 2000,
                         min_depth: float = 0.05) -> Tuple[float, float, float]:
    """
    Grid + bounded refinement of the minimum of a reflectance curve R(theta).

    Returns:
        (angle, R_min, dip_depth)

    Raises:
        NoSPRFoundError: minimum at the window edge or shallower than ``min_depth``
    """
    angles = np.linspace(angle_min, angle_max, n_grid + 2)[1:-1]
    values = np.asarray(reflectance(angles))
    i = int(np.argmin(values))
    depth = float(values.max() - values[i])
    if i == 0 or i == len(angles) - 1 or depth < min_depth:
        raise NoSPRFoundError(extras={"dip_depth": depth, "window_rad": [angle_min, angle_max]})
    result = optimize.minimize_scalar(
        lambda a: float(np.asarray(reflectance(np.array([a])))[0]),
        bounds=(angles[i - 1], angles[i + 1]),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(result.x), float(result.fun), depth


def spr_angle(stack: LayerStack, wavelength: float, incidence: str,
              library: Optional[MaterialLibrary] = None) -> SPRResult:
    """
    Angle of minimum p reflectance beyond the critical angle of the exit medium.

    Args:
        stack: vacuum-side stack description
        wavelength: laser wavelength [m]
        incidence: material the beam comes from (either side of the stack)

    Raises:
        NoSPRFoundError: no dip (e.g. lossless dielectrics, or exit medium denser than incidence)
    """
    library = library or load_materials()
    oriented = _oriented_stack(stack, incidence)
    omega = 2.0 * math.pi * constants.c / wavelength
    n_in = np.sqrt(library.permittivity(oriented.incidence, omega)).real
    n_out = np.sqrt(library.permittivity(oriented.substrate, omega)).real
    if n_in <= n_out:
        raise NoSPRFoundError(extras={"n_incidence": n_in, "n_exit": n_out})
    critical = math.asin(n_out / n_in)
    angle, r_min, depth = find_reflectance_dip(
        lambda a: reflectance_curve(oriented, wavelength, a, "p", library), critical, 0.5 * math.pi,
    )
    logger.debug("SPR angle %.4f deg (R_p = %.3e, depth %.3f)", math.degrees(angle), r_min, depth)
    return SPRResult(angle=angle, n_eff=float(n_in * math.sin(angle)), reflectance=r_min, dip_depth=depth)


# =============================================================================
# Intensity profiles
# =============================================================================
def incident_intensity(power: float, waist: float) -> float:
    """Peak intensity 2P / (pi w^2) of a Gaussian beam."""
    if not (power > 0 and waist > 0):
        raise DomainError("beam power and waist must be > 0", {"power": power, "waist": waist})
    return 2.0 * power / (math.pi * waist ** 2)


def vacuum_field_factor(stack: LayerStack, wavelength: float, angle: float, side: Literal["back", "front"],
                        z: np.ndarray, polarization: Polarization = "p",
                        library: Optional[MaterialLibrary] = None) -> Tuple[np.ndarray, complex]:
    """
    |E(z)|^2 / (n_in |E_inc|^2) on the vacuum side (z >= 0) of ``stack``.

    The ratio is the local intensity (1/2 eps0 c |E|^2) in units of the incident flux.
    Returns the ratio and k_z in vacuum.
    """
    library = library or load_materials()
    omega = 2.0 * math.pi * constants.c / wavelength
    k0 = omega / constants.c
    oriented = stack.reversed() if side == "back" else stack
    eps = layer_permittivities(oriented, "real", omega, library)
    n_in = np.sqrt(eps[0])
    k_par = float((n_in * k0).real * math.sin(angle))
    r, t, kz = stack_response(oriented, k0 ** 2, eps, k_par ** 2, polarization)
    z = np.asarray(z, dtype=float)

    if side == "back":
        kz_out, eps_out = kz[-1], eps[-1]
        if polarization == "p":
            t_e = t * n_in / np.sqrt(eps_out)
            norm = (abs(kz_out) ** 2 + k_par ** 2) / abs(eps_out * k0 ** 2)
        else:
            t_e, norm = t, 1.0
        field_sq = abs(t_e) ** 2 * norm * np.exp(-2.0 * kz_out.imag * z)
        return field_sq / n_in.real, kz_out

    kz_in = kz[0]
    down = np.exp(-1j * kz_in * z)
    up = r * np.exp(1j * kz_in * z)
    if polarization == "p":
        k = np.sqrt(eps[0]) * k0
        tangential = (kz_in / k) * (down - up)
        normal = (k_par / k) * (down + up)
        field_sq = np.abs(tangential) ** 2 + np.abs(normal) ** 2
    else:
        field_sq = np.abs(down + up) ** 2
    return field_sq / n_in.real, kz_in


def field_intensity_profile(stack: LayerStack, wavelength: float, angle: float, power: float, waist: float,
                            side: Literal["back", "front"] = "back", z: Optional[np.ndarray] = None,
                            polarization: Polarization = "p",
                            library: Optional[MaterialLibrary] = None) -> IntensityProfile:
    """
    Vacuum-side intensity profile I(z) for a plane wave at the beam's peak intensity.

    Args:
        stack: vacuum-side stack (incidence = vacuum)
        wavelength: laser wavelength [m]
        angle: incidence angle in the medium the beam comes from [rad]
        power, waist: Gaussian beam parameters, incident intensity 2P / (pi w^2)
        side: 'back' (through the substrate, Kretschmann) or 'front' (from vacuum)
        z: distances from the surface [m]; defaults to 0..1 um

    Returns:
        IntensityProfile with I(z) [W/m^2]; enhancement = I(0) / incident
    """
    i_inc = incident_intensity(power, waist)
    if z is None:
        z = np.linspace(0.0, 1e-6, 501)
    ratio, kz_out = vacuum_field_factor(stack, wavelength, angle, side, z, polarization, library)
    decay = 2.0 * float(kz_out.imag) if side == "back" and kz_out.imag > 0 else None
    return IntensityProfile(z=np.asarray(z, dtype=float), intensity=i_inc * ratio, incident_intensity=i_inc,
                            angle=angle, decay_constant=decay)


def intensity_gradient(profile: IntensityProfile, z1: float, z2: float) -> float:
    """(I(z1) - I(z2)) / (z2 - z1) by linear interpolation."""
    i1, i2 = np.interp([z1, z2], profile.z, profile.intensity)
    return float((i1 - i2) / (z2 - z1))


# =============================================================================
# Planar scattering Green tensor
# =============================================================================
def planar_green_tensor(z, stack: LayerStack, axis: Axis, frequency: float, tolerance: float = 1e-10,
                        library: Optional[MaterialLibrary] = None) -> np.ndarray:
    """
    Scattering Green tensor G(r, r) of the stack at height z (diagonal: xx = yy, zz).

    Returns an array of shape z.shape + (3, 3).
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z <= 0):
        raise DomainError("Green tensor needs z > 0")
    k_sq = complex(vacuum_k0_squared(axis, frequency))
    eps = layer_permittivities(stack, axis, frequency, library)
    scale = z ** 3

    def evanescent(kappa):
        kpar_sq = kappa ** 2 + k_sq
        r_s, _, _ = stack_response(stack, k_sq, eps, kpar_sq, "s")
        r_p, _, _ = stack_response(stack, k_sq, eps, kpar_sq, "p")
        decay = np.exp(-2.0 * kappa * z)
        xx = decay * (r_s + kappa ** 2 / k_sq * r_p) / (8.0 * math.pi)
        zz = decay * (kpar_sq / k_sq) * r_p / (4.0 * math.pi)
        return np.concatenate([(xx * scale).real, (xx * scale).imag, (zz * scale).real, (zz * scale).imag])

    kappa_min = 0.0 if axis == "real" else frequency / constants.c
    total, _ = quad_vec(evanescent, kappa_min, np.inf, epsrel=tolerance, limit=2000)

    if axis == "real":
        k0 = frequency / constants.c

        def propagating(kz):
            kpar_sq = k0 ** 2 - kz ** 2
            r_s, _, _ = stack_response(stack, k_sq, eps, kpar_sq, "s")
            r_p, _, _ = stack_response(stack, k_sq, eps, kpar_sq, "p")
            phase = np.exp(2j * kz * z)
            xx = 1j * phase * (r_s - kz ** 2 / k_sq * r_p) / (8.0 * math.pi)
            zz = 1j * phase * (kpar_sq / k_sq) * r_p / (4.0 * math.pi)
            return np.concatenate([(xx * scale).real, (xx * scale).imag, (zz * scale).real, (zz * scale).imag])

        prop, _ = quad_vec(propagating, 0.0, k0, epsrel=tolerance, limit=2000)
        total = total + prop

    n = len(z)
    xx = (total[:n] + 1j * total[n:2 * n]) / scale
    zz = (total[2 * n:3 * n] + 1j * total[3 * n:]) / scale
    g = np.zeros((n, 3, 3), dtype=complex)
    g[:, 0, 0] = xx
    g[:, 1, 1] = xx
    g[:, 2, 2] = zz
    return g
