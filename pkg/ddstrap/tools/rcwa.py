"""
Fourier modal method (RCWA) for 1D lamellar gratings.

The structure is a stack of slabs between two semi-infinite media: uniform slabs
and one or more grating slabs whose permittivity alternates between ridge and
groove along x. Fields are expanded in Rayleigh orders m = -N..N with
K_x^m = k_x + 2 pi m / period; k_y != 0 (conical mount) is supported.

Conventions follow ``stratified``: Im k_z >= 0, s/p vectors
    e_s = (-k_y, K_x, 0) / k_rho,   e_p(+/-) = (-/+ k_z k_hat_rho + k_rho z_hat) / k
so a zero-contrast grating reproduces the planar r_s and r_p exactly.
The ridge is centered on x = 0; E_x uses the inverse rule, E_y and E_z Laurent's rule.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import constants, linalg

from ..models.fields import IntensityMap
from ..models.schemas import DomainError, GratingGeometry, NoSPRFoundError, NumericalError
from .materials import MaterialLibrary, load_materials
from .stratified import Axis, find_reflectance_dip, incident_intensity, kz_branch

logger = logging.getLogger(__name__)

S, P = 0, 1
KZ_FLOOR = 1e-9


@dataclass(frozen=True)
class Slab:
    """One medium of the structure; ``thickness`` is 0 for the two semi-infinite media."""
    eps: complex
    thickness: float = 0.0
    eps_groove: Optional[complex] = None
    fill: float = 1.0

    @property
    def is_grating(self) -> bool:
        return self.eps_groove is not None and self.eps_groove != self.eps


@dataclass
class ReflectionMatrix:
    """
    Order-resolved reflection r[sigma_out, m, sigma_in, n] (sigma: 0 = s, 1 = p).

    ``kz`` holds k_z of every order in the incidence medium; transmission, when
    computed, is expressed in the exit medium's s/p basis with ``kz_exit``.
    """
    data: np.ndarray
    orders: np.ndarray
    kz: np.ndarray
    axis: str
    frequency: float
    kx: float
    ky: float
    truncation: int
    transmission: Optional[np.ndarray] = None
    kz_exit: Optional[np.ndarray] = None
    flags: List[str] = field(default_factory=list)

    def index(self, m: int) -> int:
        return int(m + self.truncation)

    def element(self, m: int, sigma: int, n: int, sigma_in: int) -> complex:
        return complex(self.data[sigma, self.index(m), sigma_in, self.index(n)])

    def zero_order(self) -> np.ndarray:
        """2x2 [[ss, sp], [ps, pp]] block of the specular order."""
        i = self.index(0)
        return self.data[:, i, :, i]

    def efficiencies(self, sigma_in: int, n: int = 0) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Reflected and transmitted power fractions per (sigma, m) for a propagating incident order."""
        i = self.index(n)
        kz_in = self.kz[i].real
        if not kz_in > 0:
            raise DomainError("incident order is evanescent", {"order": n})
        propagating = (np.abs(self.kz.imag) < 1e-12 * np.abs(self.kz)) & (self.kz.real > 0)
        refl = np.abs(self.data[:, :, sigma_in, i]) ** 2 * np.where(propagating, self.kz.real, 0.0) / kz_in
        trans = None
        if self.transmission is not None:
            open_exit = (np.abs(self.kz_exit.imag) < 1e-12 * np.abs(self.kz_exit)) & (self.kz_exit.real > 0)
            trans = (np.abs(self.transmission[:, :, sigma_in, i]) ** 2
                     * np.where(open_exit, self.kz_exit.real, 0.0) / kz_in)
        return refl, trans


# =============================================================================
# Structure and modes
# =============================================================================
def vacuum_wavenumber(axis: Axis, frequency: float) -> complex:
    """k0 = w / c on the real axis, i xi / c on the imaginary axis."""
    return complex(frequency / constants.c) if axis == "real" else 1j * frequency / constants.c


def _eps(library: MaterialLibrary, name: str, axis: Axis, frequency: float) -> complex:
    if axis == "real":
        return complex(library.permittivity(name, frequency))
    return complex(library.permittivity_imag_axis(name, frequency))


def build_slabs(g: GratingGeometry, axis: Axis, frequency: float, library: Optional[MaterialLibrary] = None,
                from_substrate: bool = False) -> List[Slab]:
    """Cover, grating layer, extra layers, substrate (reversed when lit from the substrate)."""
    library = library or load_materials()
    slabs = [
        Slab(eps=_eps(library, g.cover, axis, frequency)),
        Slab(eps=_eps(library, g.ridge_material, axis, frequency), thickness=g.ridge_height,
             eps_groove=_eps(library, g.groove_material, axis, frequency), fill=g.fill_factor),
        *[Slab(eps=_eps(library, layer.material, axis, frequency), thickness=layer.thickness) for layer in g.layers],
        Slab(eps=_eps(library, g.substrate, axis, frequency)),
    ]
    return list(reversed(slabs)) if from_substrate else slabs


def orders(truncation: int) -> np.ndarray:
    return np.arange(-truncation, truncation + 1)


def fourier_coefficients(value_ridge: complex, value_groove: complex, fill: float, max_order: int) -> np.ndarray:
    """Coefficients f_h, h = -max_order..max_order, of a ridge of relative width ``fill`` centered on x = 0."""
    h = np.arange(-max_order, max_order + 1)
    coeffs = (value_ridge - value_groove) * fill * np.sinc(h * fill)
    coeffs = coeffs.astype(complex)
    coeffs[max_order] += value_groove
    return coeffs


def toeplitz_matrix(coeffs: np.ndarray, size: int) -> np.ndarray:
    """[[f]]_{mn} = f_{m-n} for coefficients indexed from -(size-1)."""
    center = size - 1
    return linalg.toeplitz(coeffs[center:center + size], coeffs[center::-1][:size])


def _uniform_q(eps: complex, kx: np.ndarray, ky: float, k0: complex) -> np.ndarray:
    return np.block([
        [np.diag(-kx * ky), np.diag(kx ** 2 - k0 ** 2 * eps)],
        [np.diag(np.full(len(kx), k0 ** 2 * eps - ky ** 2)), np.diag(ky * kx)],
    ]) / k0


def layer_modes(slab: Slab, kx: np.ndarray, ky: float, k0: complex, floor: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """
    Eigenmodes (W, V, gamma) of one slab.

    E_t = W (e^{i gamma z} c+ + e^{-i gamma z} c-), H_t = V (e^{i gamma z} c+ - e^{-i gamma z} c-)
    with H normalized as Z0 H. Returns a flag telling whether a k_z floor was applied.
    """
    size = len(kx)
    if not slab.is_grating:
        kz = kz_branch(slab.eps * k0 ** 2 - kx ** 2 - ky ** 2)
        floored = np.abs(kz) < floor
        kz = np.where(floored, floor, kz)
        gamma = np.concatenate([kz, kz])
        q = _uniform_q(slab.eps, kx, ky, k0)
        return np.eye(2 * size, dtype=complex), q / gamma[None, :], gamma, bool(floored.any())

    eps_c = fourier_coefficients(slab.eps, slab.eps_groove, slab.fill, size - 1)
    inv_c = fourier_coefficients(1.0 / slab.eps, 1.0 / slab.eps_groove, slab.fill, size - 1)
    e_mat = toeplitz_matrix(eps_c, size)
    e_inv = linalg.inv(e_mat)
    a_mat = linalg.inv(toeplitz_matrix(inv_c, size))
    kx_d = np.diag(kx.astype(complex))
    eye = np.eye(size)

    p_mat = np.block([
        [kx_d @ e_inv * ky, k0 ** 2 * eye - kx_d @ e_inv @ kx_d],
        [ky ** 2 * e_inv - k0 ** 2 * eye, -ky * e_inv @ kx_d],
    ]) / k0
    q_mat = np.block([
        [-ky * kx_d, kx_d @ kx_d - k0 ** 2 * e_mat],
        [k0 ** 2 * a_mat - ky ** 2 * eye, ky * kx_d],
    ]) / k0
    gamma_sq, w_mat = linalg.eig(p_mat @ q_mat)
    gamma = kz_branch(gamma_sq)
    order = np.lexsort((gamma.real, gamma.imag))
    gamma, w_mat = gamma[order], w_mat[:, order]
    floored = np.abs(gamma) < floor
    gamma = np.where(floored, floor, gamma)
    return w_mat, q_mat @ w_mat / gamma[None, :], gamma, bool(floored.any())


def transverse_basis(eps: complex, kx: np.ndarray, ky: float, k0: complex, kz: np.ndarray, upward: bool) -> np.ndarray:
    """Columns map (s, p) amplitudes of every order to [E_x; E_y] amplitudes."""
    k_rho = np.sqrt(kx ** 2 + ky ** 2)
    safe = np.where(k_rho > 0, k_rho, 1.0)
    ux = np.where(k_rho > 0, kx / safe, 1.0)
    uy = np.where(k_rho > 0, ky / safe, 0.0)
    k = np.sqrt(complex(eps)) * k0
    sign = -1.0 if upward else 1.0
    pz = sign * kz / k
    return np.block([
        [np.diag(-uy + 0j), np.diag(pz * ux)],
        [np.diag(ux + 0j), np.diag(pz * uy)],
    ])


# =============================================================================
# Scattering
# =============================================================================
@dataclass
class _Solution:
    reflection: np.ndarray  # transverse basis, top of the incidence medium interface
    transfer: Optional[np.ndarray]  # incident transverse amplitudes -> exit-medium downward amplitudes
    kz_top: np.ndarray
    kz_bottom: np.ndarray
    floored: bool


def _solve(slabs: Sequence[Slab], kx: np.ndarray, ky: float, k0: complex, with_transfer: bool,
           geometry_echo: Optional[dict] = None) -> _Solution:
    floor = KZ_FLOOR * abs(k0)
    try:
        modes = [layer_modes(slab, kx, ky, k0, floor) for slab in slabs]
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"modal eigenproblem failed: {e}", {"geometry": geometry_echo, "kx": float(kx[len(kx) // 2]),
                                                                  "ky": ky, "k0": str(k0)}) from e
    size = 2 * len(kx)
    eye = np.eye(size)
    r_mat = np.zeros((size, size), dtype=complex)
    stages = []
    try:
        for j in range(len(slabs) - 2, -1, -1):
            w_b, v_b, g_b, _ = modes[j + 1]
            phase = None
            if j + 1 < len(slabs) - 1:
                phase = np.exp(1j * g_b * slabs[j + 1].thickness)
                r_mat = phase[:, None] * r_mat * phase[None, :]
            w_a, v_a, _, _ = modes[j]
            f_mat = linalg.solve(w_a, w_b @ (r_mat + eye))
            g_mat = linalg.solve(v_a, v_b @ (r_mat - eye))
            minus = f_mat - g_mat
            r_mat = linalg.solve(minus.T, (f_mat + g_mat).T).T
            if with_transfer:
                stages.append((minus, phase))
    except linalg.LinAlgError as e:
        raise NumericalError(f"singular interface matrix: {e}", {"geometry": geometry_echo}) from e

    transfer = None
    if with_transfer:
        # stages run bottom-up; apply them top-down
        transfer = np.eye(size, dtype=complex)
        for minus, phase in reversed(stages):
            transfer = linalg.solve(0.5 * minus, transfer)
            if phase is not None:
                transfer = phase[:, None] * transfer
    half = len(kx)
    return _Solution(reflection=r_mat, transfer=transfer, kz_top=modes[0][2][:half], kz_bottom=modes[-1][2][:half],
                     floored=any(m[3] for m in modes))


def _check_args(g: GratingGeometry, axis: str, frequency: float, kx: float, truncation: int):
    if truncation < 1:
        raise DomainError("truncation order must be >= 1", {"truncation": truncation})
    if abs(kx) > math.pi / g.period * (1.0 + 1e-12):
        raise DomainError("k_x must lie in the first Brillouin zone", {"kx": kx, "limit": math.pi / g.period})
    if axis not in ("real", "imaginary"):
        raise DomainError(f"unknown frequency axis '{axis}'")
    if not frequency > 0:
        raise DomainError("frequency must be > 0", {"frequency": frequency})


def _reflection_at(g: GratingGeometry, slabs: Sequence[Slab], axis: Axis, frequency: float, kx: float, ky: float,
                   truncation: int, with_transmission: bool) -> ReflectionMatrix:
    k0 = vacuum_wavenumber(axis, frequency)
    m = orders(truncation)
    kx_m = kx + 2.0 * math.pi * m / g.period
    sol = _solve(slabs, kx_m, ky, k0, with_transmission, geometry_echo=g.model_dump())
    top, bottom = slabs[0], slabs[-1]
    t_down = transverse_basis(top.eps, kx_m, ky, k0, sol.kz_top, upward=False)
    t_up = transverse_basis(top.eps, kx_m, ky, k0, sol.kz_top, upward=True)
    data = linalg.solve(t_up, sol.reflection @ t_down)
    size = len(m)
    flags = ["kz-floor"] if sol.floored else []
    transmission = None
    if with_transmission:
        t_exit = transverse_basis(bottom.eps, kx_m, ky, k0, sol.kz_bottom, upward=False)
        transmission = linalg.solve(t_exit, sol.transfer @ t_down).reshape(2, size, 2, size)
    if axis == "imaginary":
        residual = float(np.max(np.abs(data.imag))) if data.size else 0.0
        if residual > 1e-8 * max(float(np.max(np.abs(data))), 1.0):
            flags.append("imaginary-residual")
        data = data.real.astype(complex)
    return ReflectionMatrix(
        data=data.reshape(2, size, 2, size), orders=m, kz=sol.kz_top, axis=axis, frequency=frequency,
        kx=kx, ky=ky, truncation=truncation, transmission=transmission,
        kz_exit=sol.kz_bottom if with_transmission else None, flags=flags,
    )


def reflection_matrix(g: GratingGeometry, slabs: Sequence[Slab], axis: Axis, frequency: float, kx: float, ky: float,
                      truncation: int, with_transmission: bool = False, cache=None) -> ReflectionMatrix:
    """Single solve on prebuilt slabs, read from / written to ``cache`` when one is given."""
    key = (g.geometry_hash(), axis, frequency, kx, ky, truncation)
    use_cache = cache is not None and not with_transmission
    if use_cache:
        stored = cache.load(key)
        if stored is not None and stored.kz is not None:
            m = orders(truncation)
            return ReflectionMatrix(data=stored.data.reshape(2, len(m), 2, len(m)), orders=m, kz=stored.kz, axis=axis,
                                    frequency=frequency, kx=kx, ky=ky, truncation=truncation, flags=list(stored.flags))
    result = _reflection_at(g, slabs, axis, frequency, kx, ky, truncation, with_transmission)
    if use_cache:
        cache.store(key, result.data, kz=result.kz, flags=result.flags)
    return result


def rcwa_reflection(g: GratingGeometry, axis: Axis, frequency: float, kx: float, ky: float, truncation: int = 15,
                    adaptive: bool = False, max_truncation: int = 40, convergence_tol: float = 1e-3,
                    with_transmission: bool = False, library: Optional[MaterialLibrary] = None,
                    cache=None) -> ReflectionMatrix:
    """
    Reflection matrix of the grating for downward waves incident from the cover.

    Args:
        g: grating geometry
        axis: 'real' (frequency = w) or 'imaginary' (frequency = xi)
        kx: Bloch wavevector, |kx| <= pi / period
        ky: transverse wavevector along the ridges
        truncation: N, orders -N..N
        adaptive: raise N by 5 until the specular block changes by < convergence_tol
        cache: optional store with ``load(key)`` / ``store(key, matrix)``

    Raises:
        DomainError: N < 1 or kx outside the Brillouin zone
        NumericalError: modal eigenproblem failure (geometry echoed in extras)
    """
    _check_args(g, axis, frequency, kx, truncation)
    slabs = build_slabs(g, axis, frequency, library)

    def compute(n: int) -> ReflectionMatrix:
        return reflection_matrix(g, slabs, axis, frequency, kx, ky, n, with_transmission, cache)

    result = compute(truncation)
    if not adaptive:
        return result
    n = truncation
    while n + 5 <= max_truncation:
        n += 5
        refined = compute(n)
        change = np.max(np.abs(refined.zero_order() - result.zero_order())) / max(np.max(np.abs(refined.zero_order())), 1e-300)
        logger.debug("RCWA N=%d: specular change %.2e", n, change)
        result = refined
        if change < convergence_tol:
            result.flags.append(f"converged-N={n}")
            return result
    result.flags.append("rcwa-not-converged")
    logger.warning("RCWA specular block not converged at N=%d (tol %.1e)", n, convergence_tol)
    return result


def converged_truncation(g: GratingGeometry, axis: Axis, frequency: float, truncation: int, max_truncation: int,
                         convergence_tol: float, library: Optional[MaterialLibrary] = None) -> Tuple[int, List[str]]:
    """Truncation order reached by the adaptive policy at normal incidence."""
    result = rcwa_reflection(g, axis, frequency, 0.0, 0.0, truncation, adaptive=True, max_truncation=max_truncation,
                             convergence_tol=convergence_tol, library=library)
    flags = [f for f in result.flags if f == "rcwa-not-converged"]
    return result.truncation, flags


# =============================================================================
# Intensity maps
# =============================================================================
def _field_components(kx_m: np.ndarray, ky: float, kz: np.ndarray, e_t: np.ndarray, upward: bool) -> np.ndarray:
    """(3, M) vector amplitudes from transverse amplitudes via k . E = 0."""
    size = len(kx_m)
    ex, ey = e_t[:size], e_t[size:]
    ez = (kx_m * ex + ky * ey) / kz
    return np.stack([ex, ey, -ez if upward else ez])


def grating_field_map(g: GratingGeometry, wavelength: float, side: Literal["back", "front"], power: float,
                      waist: float, angle: float, truncation: int = 15, x: Optional[np.ndarray] = None,
                      z: Optional[np.ndarray] = None, library: Optional[MaterialLibrary] = None) -> IntensityMap:
    """
    p-polarized (TM) plane-wave intensity I(x, z) in the cover, z measured from the grating top.

    The beam comes from the substrate ('back') or from the cover ('front') at ``angle``
    (in that medium, plane of incidence perpendicular to the ridges) with peak intensity 2P / (pi w^2).
    """
    i_inc = incident_intensity(power, waist)
    library = library or load_materials()
    omega = 2.0 * math.pi * constants.c / wavelength
    k0 = vacuum_wavenumber("real", omega)
    if x is None:
        x = np.linspace(-0.5 * g.period, 0.5 * g.period, 32, endpoint=False)
    if z is None:
        z = np.linspace(0.0, 1e-6, 501)
    x, z = np.asarray(x, dtype=float), np.asarray(z, dtype=float)

    slabs = build_slabs(g, "real", omega, library, from_substrate=(side == "back"))
    top = slabs[0]
    n_in = np.sqrt(top.eps)
    kx = float((n_in * k0).real * math.sin(angle))
    m = orders(truncation)
    kx_m = kx + 2.0 * math.pi * m / g.period
    size = len(m)
    sol = _solve(slabs, kx_m, 0.0, k0, with_transfer=(side == "back"), geometry_echo=g.model_dump())

    incident = np.zeros(2 * size, dtype=complex)
    incident[P * size + truncation] = 1.0
    t_down = transverse_basis(top.eps, kx_m, 0.0, k0, sol.kz_top, upward=False)
    a_down = t_down @ incident

    if side == "back":
        kz = sol.kz_bottom
        amp = _field_components(kx_m, 0.0, kz, sol.transfer @ a_down, upward=False)
        fields = amp[:, :, None] * np.exp(1j * kz[None, :, None] * z[None, None, :])
    else:
        kz = sol.kz_top
        down = _field_components(kx_m, 0.0, kz, a_down, upward=False)
        up = _field_components(kx_m, 0.0, kz, sol.reflection @ a_down, upward=True)
        fields = (down[:, :, None] * np.exp(-1j * kz[None, :, None] * z[None, None, :])
                  + up[:, :, None] * np.exp(1j * kz[None, :, None] * z[None, None, :]))

    harmonics = np.exp(2j * math.pi * np.outer(x, m) / g.period)  # (nx, M)
    e_xz = np.einsum("xm,cmz->cxz", harmonics, fields)
    intensity = i_inc * np.sum(np.abs(e_xz) ** 2, axis=0) / n_in.real
    flags = ["kz-floor"] if sol.floored else []
    return IntensityMap(x=x, z=z, intensity=intensity, flags=flags)


def averaged_two_beam_intensity(g: GratingGeometry, wavelength: float, power_back: float, alpha: float,
                                angle_back: float, angle_front: float = 0.0, waist: float = 200e-6,
                                truncation: int = 15, x: Optional[np.ndarray] = None, z: Optional[np.ndarray] = None,
                                library: Optional[MaterialLibrary] = None) -> IntensityMap:
    """Time-averaged I_back + I_front with P_front = alpha * P_back; flags columns that do not decay monotonically."""
    if alpha < 0:
        raise DomainError("alpha_1529 must be >= 0", {"alpha": alpha})
    back = grating_field_map(g, wavelength, "back", power_back, waist, angle_back, truncation, x, z, library)
    total = back.intensity.copy()
    flags = list(back.flags)
    if alpha > 0:
        front = grating_field_map(g, wavelength, "front", alpha * power_back, waist, angle_front, truncation, x, z, library)
        total = total + front.intensity
        flags += [f for f in front.flags if f not in flags]
    result = IntensityMap(x=back.x, z=back.z, intensity=total, flags=flags)
    if not np.all(result.monotonic_columns):
        result.flags.append("non-monotonic-columns")
    return result


def grating_spr_angle(g: GratingGeometry, wavelength: float, truncation: int = 15, n_grid: int = 400,
                      library: Optional[MaterialLibrary] = None) -> float:
    """Angle (in the substrate) minimizing the specular p reflectance for back illumination."""
    library = library or load_materials()
    omega = 2.0 * math.pi * constants.c / wavelength
    k0 = vacuum_wavenumber("real", omega)
    slabs = build_slabs(g, "real", omega, library, from_substrate=True)
    n_in = np.sqrt(slabs[0].eps).real
    n_out = np.sqrt(slabs[-1].eps).real
    if n_in <= n_out:
        raise NoSPRFoundError(extras={"n_incidence": n_in, "n_exit": n_out})
    m = orders(truncation)

    def reflectance(angles):
        values = []
        for angle in np.atleast_1d(angles):
            kx_m = float(n_in * k0.real * math.sin(angle)) + 2.0 * math.pi * m / g.period
            sol = _solve(slabs, kx_m, 0.0, k0, with_transfer=False)
            t_down = transverse_basis(slabs[0].eps, kx_m, 0.0, k0, sol.kz_top, upward=False)
            t_up = transverse_basis(slabs[0].eps, kx_m, 0.0, k0, sol.kz_top, upward=True)
            data = linalg.solve(t_up, sol.reflection @ t_down)
            i = P * len(m) + truncation
            values.append(abs(data[i, i]) ** 2)
        return np.asarray(values)

    critical = math.asin(n_out / n_in)
    angle, r_min, depth = find_reflectance_dip(reflectance, critical, 0.5 * math.pi, n_grid=n_grid)
    logger.info("grating SPR angle %.3f deg (R_pp %.3e)", math.degrees(angle), r_min)
    return angle
