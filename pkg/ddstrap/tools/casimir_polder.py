"""
Casimir-Polder potentials of 5S and 5P atoms above planar stacks and 1D gratings.

Non-resonant part (all states):
    U(z) = (hbar mu0 / 2 pi) int_0^inf dxi xi^2 alpha(i xi) Tr G(z, z, i xi)
which, for a planar stack, reduces to
    (hbar mu0 / 8 pi^2) int dxi xi^2 alpha int_{xi/c}^inf dkappa e^{-2 kappa z} [r_s + (1 - 2 kappa^2 c^2 / xi^2) r_p].
Resonant part (5P only, D2 line):
    U_res(z) = -mu0 w0^2 (|d0|^2 / 3) Tr Re G(z, z, w0).

The xi axis uses composite Gauss-Legendre panels in log(xi); the planar kappa
integral uses Gauss-Laguerre nodes after kappa = xi / c + t / (2 z).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import constants, sparse
from scipy.integrate import quad_vec
from scipy.interpolate import CubicSpline
from scipy.special import roots_laguerre, roots_legendre

from ..models.fields import CPResult, PotentialCurve, PotentialMap
from ..models.schemas import DomainError, GratingGeometry, LayerStack, QuadratureSpec, RcwaConfig
from .atomic_data import EXCITED, GROUND, AtomicData, canonical_state, load_atomic_data
from .materials import MaterialLibrary, load_materials
from .rcwa import build_slabs, converged_truncation, orders, reflection_matrix, vacuum_wavenumber
from .stratified import layer_permittivities, stack_response

logger = logging.getLogger(__name__)

HBAR = constants.hbar
MU0 = constants.mu_0
C = constants.c


@dataclass(frozen=True)
class PerfectMirror:
    """Ideal conductor: r_s = -1, r_p = +1 on both frequency axes."""
    name: str = "perfect-mirror"

    def geometry_hash(self) -> str:
        return "perfect-mirror"


Surface = Union[LayerStack, PerfectMirror]


# =============================================================================
# Quadrature helpers
# =============================================================================
def xi_quadrature(z_min: float, z_max: float, omega_min: float, panels_per_decade: int,
                  nodes_per_panel: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights for int_0^inf f(xi) dxi, composite Gauss-Legendre in log(xi).

    The window runs from 1e-7 min(c / 2 z_max, omega_min) to 25 c / z_min.
    """
    xi_lo = 1e-7 * min(C / (2.0 * z_max), omega_min)
    xi_hi = 25.0 * C / z_min
    decades = math.log10(xi_hi / xi_lo)
    n_panels = max(1, int(math.ceil(decades * panels_per_decade)))
    edges = np.linspace(math.log(xi_lo), math.log(xi_hi), n_panels + 1)
    t, w = roots_legendre(nodes_per_panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    log_xi = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    xi = np.exp(log_xi)
    return xi, weights * xi


def tail_ratio(integrand: np.ndarray) -> float:
    """Largest end-point magnitude relative to the peak of a sampled integrand (axis 0)."""
    mags = np.abs(integrand).reshape(integrand.shape[0], -1)
    peak = mags.max(axis=0)
    peak = np.where(peak > 0, peak, 1.0)
    return float(np.max(np.maximum(mags[0], mags[-1]) / peak))


def _omega_min(atomic: AtomicData, states: Sequence[str]) -> float:
    return min(float(np.min(np.abs(atomic.table.channels(s)[0]))) for s in states)


def _check_positions(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z <= 0):
        raise DomainError("atom-surface distance must be > 0", {"z_min": float(z.min())})
    return z


# =============================================================================
# Planar surfaces
# =============================================================================
def _imag_axis_reflections(surface: Surface, xi: float, kappa: np.ndarray, eps: Optional[list]):
    if isinstance(surface, PerfectMirror):
        return -np.ones_like(kappa), np.ones_like(kappa)
    k0_sq = -(xi / C) ** 2
    kpar_sq = kappa ** 2 + k0_sq
    r_s, _, _ = stack_response(surface, k0_sq, eps, kpar_sq, "s")
    r_p, _, _ = stack_response(surface, k0_sq, eps, kpar_sq, "p")
    return r_s.real, r_p.real


def cp_nonresonant_planar(state: str, z, surface: Surface, quadrature: Optional[QuadratureSpec] = None,
                          atomic: Optional[AtomicData] = None,
                          library: Optional[MaterialLibrary] = None) -> CPResult:
    """
    Non-resonant CP energy [J] at distances z above a planar surface.

    Returns:
        CPResult with the energies and the larger of the xi-axis end-point ratios;
        flagged 'flagged-quadrature' when the ratio exceeds ``quadrature.tail_ratio``
    """
    quadrature = quadrature or QuadratureSpec()
    atomic = atomic or load_atomic_data()
    state = canonical_state(state)
    z = _check_positions(z)
    xi, w_xi = xi_quadrature(z.min(), z.max(), _omega_min(atomic, [state]),
                             quadrature.xi_panels_per_decade, quadrature.xi_nodes_per_panel)
    t, w_t = roots_laguerre(quadrature.laguerre_nodes)
    alpha = atomic.dynamic_polarizability(state, xi)

    integrand = np.empty((len(xi), len(z)))
    for i, x in enumerate(xi):
        eps = None if isinstance(surface, PerfectMirror) else layer_permittivities(surface, "imaginary", x, library)
        kappa = x / C + t[:, None] / (2.0 * z[None, :])
        r_s, r_p = _imag_axis_reflections(surface, x, kappa, eps)
        bracket = r_s + (1.0 - 2.0 * (kappa * C / x) ** 2) * r_p
        inner = np.exp(-2.0 * x * z / C) / (2.0 * z) * (w_t @ bracket)
        integrand[i] = x ** 2 * alpha[i] * inner
    energy = HBAR * MU0 / (8.0 * math.pi ** 2) * (w_xi @ integrand)
    ratio = tail_ratio(integrand * w_xi[:, None])
    flags = []
    if ratio > quadrature.tail_ratio:
        flags.append("flagged-quadrature")
        logger.warning("CP %s xi-tail ratio %.2e above %.1e", state, ratio, quadrature.tail_ratio)
    return CPResult(energy=energy, tail_ratio=ratio, flags=flags)


def resonant_green_trace(z, surface: Surface, omega: float, tolerance: float = 1e-8,
                         library: Optional[MaterialLibrary] = None) -> np.ndarray:
    """Tr Re G(z, z, w) of a planar surface: propagating window plus evanescent part."""
    z = _check_positions(z)
    k0 = omega / C
    scale = z ** 3
    if isinstance(surface, PerfectMirror):
        a = 2.0 * z
        window = (-k0 ** 2 * np.cos(a * k0) / a + 2.0 * k0 * np.sin(a * k0) / a ** 2
                  + 2.0 * np.cos(a * k0) / a ** 3 - 2.0 / a ** 3)
        return (window + 1.0 / (4.0 * z ** 3)) / (2.0 * math.pi * k0 ** 2)

    eps = layer_permittivities(surface, "real", omega, library)

    def propagating(kz):
        kpar_sq = k0 ** 2 - kz ** 2
        r_s, _, _ = stack_response(surface, k0 ** 2, eps, kpar_sq, "s")
        r_p, _, _ = stack_response(surface, k0 ** 2, eps, kpar_sq, "p")
        value = 1j * np.exp(2j * kz * z) * (r_s + (1.0 - 2.0 * kz ** 2 / k0 ** 2) * r_p) / (4.0 * math.pi)
        return value.real * scale

    def evanescent(kappa):
        kpar_sq = k0 ** 2 + kappa ** 2
        r_s, _, _ = stack_response(surface, k0 ** 2, eps, kpar_sq, "s")
        r_p, _, _ = stack_response(surface, k0 ** 2, eps, kpar_sq, "p")
        value = np.exp(-2.0 * kappa * z) * (r_s + (1.0 + 2.0 * kappa ** 2 / k0 ** 2) * r_p) / (4.0 * math.pi)
        return value.real * scale

    window, _ = quad_vec(propagating, 0.0, k0, epsrel=tolerance, limit=4000)
    tail, _ = quad_vec(evanescent, 0.0, np.inf, epsrel=tolerance, limit=4000)
    return (window + tail) / scale


def cp_resonant_planar(z, surface: Surface, atomic: Optional[AtomicData] = None, tolerance: float = 1e-8,
                       library: Optional[MaterialLibrary] = None) -> CPResult:
    """Resonant 5P energy [J] from the D2 line."""
    atomic = atomic or load_atomic_data()
    d2 = atomic.table.d2
    trace = resonant_green_trace(z, surface, d2.omega, tolerance, library)
    energy = -MU0 * d2.omega ** 2 * d2.dipole ** 2 / 3.0 * trace
    return CPResult(energy=energy)


def cp_planar(state: str, z, surface: Surface, quadrature: Optional[QuadratureSpec] = None,
              atomic: Optional[AtomicData] = None, library: Optional[MaterialLibrary] = None) -> CPResult:
    """Non-resonant part for 5S; non-resonant plus resonant for 5P."""
    state = canonical_state(state)
    result = cp_nonresonant_planar(state, z, surface, quadrature, atomic, library)
    if state == EXCITED:
        resonant = cp_resonant_planar(z, surface, atomic, library=library)
        result = CPResult(energy=result.energy + resonant.energy, tail_ratio=result.tail_ratio, flags=result.flags)
    return result


def cp_planar_curve(state: str, z: np.ndarray, surface: Surface, quadrature: Optional[QuadratureSpec] = None,
                    atomic: Optional[AtomicData] = None, library: Optional[MaterialLibrary] = None) -> PotentialCurve:
    quadrature = quadrature or QuadratureSpec()
    result = cp_planar(state, z, surface, quadrature, atomic, library)
    return PotentialCurve(
        z=np.asarray(z, dtype=float), values=result.energy, label=f"U_CP {canonical_state(state)}", flags=result.flags,
        metadata={"geometry_hash": surface.geometry_hash(), "tail_ratio": result.tail_ratio,
                  "quadrature": quadrature.model_dump()},
    )


# =============================================================================
# Perfect-mirror oracles
# =============================================================================
def perfect_mirror_c3(state: str, atomic: Optional[AtomicData] = None) -> float:
    """C3 [J m^3] of the non-retarded limit U = -C3 / z^3."""
    atomic = atomic or load_atomic_data()
    return HBAR / (16.0 * math.pi ** 2 * constants.epsilon_0) * atomic.polarizability_integral(canonical_state(state))


def perfect_mirror_far_field(state: str, z, atomic: Optional[AtomicData] = None):
    """Retarded limit -3 hbar c alpha(0) / (32 pi^2 eps0 z^4)."""
    atomic = atomic or load_atomic_data()
    alpha0 = atomic.dynamic_polarizability(canonical_state(state), 0.0)
    return -3.0 * HBAR * C * alpha0 / (32.0 * math.pi ** 2 * constants.epsilon_0 * np.asarray(z, dtype=float) ** 4)


def perfect_mirror_resonant(z, atomic: Optional[AtomicData] = None):
    """Closed-form resonant 5P energy above a perfect mirror."""
    return cp_resonant_planar(z, PerfectMirror(), atomic).energy


# =============================================================================
# Gratings
# =============================================================================
_DIAGONAL = ((0, 0), (1, 1), (2, 2))
_FULL = ((0, 0), (1, 1), (2, 2), (0, 2), (2, 0))


@dataclass
class GratingGreenFourier:
    """Fourier components S_d(z) of G(x, z) = sum_d S_d(z) exp(i 2 pi d x / period)."""
    components: Tuple[Tuple[int, int], ...]
    harmonics: np.ndarray
    z: np.ndarray
    values: np.ndarray  # (n_components, n_harmonics, n_z)
    period: float
    flags: List[str]

    def synthesize(self, x: np.ndarray) -> np.ndarray:
        """(n_components, n_x, n_z) complex values on the x grid."""
        phase = np.exp(2j * math.pi * np.outer(np.asarray(x, dtype=float), self.harmonics) / self.period)
        return np.einsum("xd,cdz->cxz", phase, self.values)

    def trace(self, x: np.ndarray) -> np.ndarray:
        idx = [self.components.index(p) for p in _DIAGONAL]
        return self.synthesize(x)[idx].sum(axis=0)


def _diagonal_map(size: int) -> sparse.csr_matrix:
    """Sums an (M, M) matrix along its diagonals d = m - n = -(M-1)..M-1."""
    m, n = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    rows = (m - n + size - 1).ravel()
    cols = (m * size + n).ravel()
    return sparse.csr_matrix((np.ones(size * size), (rows, cols)), shape=(2 * size - 1, size * size))


def _cover_vectors(eps: complex, kx_m: np.ndarray, ky: float, k0: complex, kz: np.ndarray, upward: bool) -> np.ndarray:
    """(2, M, 3) polarization vectors e^s, e^p of every order."""
    k_rho = np.sqrt(kx_m ** 2 + ky ** 2)
    safe = np.where(k_rho > 0, k_rho, 1.0)
    ux = np.where(k_rho > 0, kx_m / safe, 1.0)
    uy = np.where(k_rho > 0, ky / safe, 0.0)
    k = np.sqrt(complex(eps)) * k0
    sign = -1.0 if upward else 1.0
    zeros = np.zeros_like(ux)
    e_s = np.stack([-uy, ux, zeros], axis=-1).astype(complex)
    e_p = np.stack([sign * kz / k * ux, sign * kz / k * uy, k_rho / k + 0j * zeros], axis=-1)
    return np.stack([e_s, e_p])


class _GratingGreenKernel:
    """Integrand of the grating Green tensor at one frequency, as a function of (k_x, k_y)."""

    def __init__(self, g: GratingGeometry, axis: str, frequency: float, truncation: int, z: np.ndarray,
                 components, library: Optional[MaterialLibrary], cache=None):
        self.g = g
        self.axis = axis
        self.frequency = frequency
        self.truncation = truncation
        self.z = z
        self.components = components
        self.cache = cache
        self.slabs = build_slabs(g, axis, frequency, library)
        self.k0 = vacuum_wavenumber(axis, frequency)
        self.m = orders(truncation)
        self.size = len(self.m)
        self.dmap = _diagonal_map(self.size)
        self.floored = False

    def __call__(self, kx: float, ky: float) -> np.ndarray:
        """(n_components, 2M - 1, n_z) contribution before the i / 8 pi^2 prefactor."""
        rm = reflection_matrix(self.g, self.slabs, self.axis, self.frequency, kx, ky, self.truncation, cache=self.cache)
        kx_m = kx + 2.0 * math.pi * self.m / self.g.period
        kz = rm.kz
        floor = 1e-9 * abs(self.k0)
        small = np.abs(kz) < floor
        if small.any():
            self.floored = True
            kz = np.where(small, floor, kz)
        eps = self.slabs[0].eps
        up = _cover_vectors(eps, kx_m, ky, self.k0, kz, upward=True)
        down = _cover_vectors(eps, kx_m, ky, self.k0, kz, upward=False)
        propagator = np.exp(1j * (kz[:, None] + kz[None, :]) * self.z[:, None, None])  # (nz, M, M)
        out = np.empty((len(self.components), 2 * self.size - 1, len(self.z)), dtype=complex)
        for c, (i, j) in enumerate(self.components):
            coupling = np.einsum("am,ambn,bn->mn", up[:, :, i], rm.data, down[:, :, j]) / kz[None, :]
            weighted = (propagator * coupling[None]).reshape(len(self.z), -1)
            out[c] = (self.dmap @ weighted.T)
        return out


def _ky_panels(frequency: float, z: np.ndarray, quadrature: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Geometric Gauss-Legendre panels on [0, ky_cut] for the imaginary axis."""
    ky_cut = 15.0 / z.min() + frequency / C
    ky_lo = min(0.1 / z.max(), 0.1 * ky_cut)
    n_panels = quadrature.ky_panels
    edges = np.concatenate([[0.0], np.geomspace(ky_lo, ky_cut, n_panels)])
    t, w = roots_legendre(quadrature.ky_nodes_per_panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return (mid[:, None] + half[:, None] * t).ravel(), (half[:, None] * w).ravel()


def _kx_nodes(period: float, n_kx: int) -> Tuple[np.ndarray, np.ndarray]:
    t, w = roots_legendre(n_kx)
    half = math.pi / period
    return half * t, half * w


def _grating_green_fourier(g: GratingGeometry, axis: str, frequency: float, z: np.ndarray, truncation: int,
                           quadrature: QuadratureSpec, components=_DIAGONAL,
                           library: Optional[MaterialLibrary] = None, cache=None) -> GratingGreenFourier:
    z = _check_positions(z)
    kernel = _GratingGreenKernel(g, axis, frequency, truncation, z, components, library, cache)
    kx_nodes, kx_weights = _kx_nodes(g.period, quadrature.n_kx)
    total = np.zeros((len(components), 2 * kernel.size - 1, len(z)), dtype=complex)
    flags: List[str] = []

    if axis == "imaginary":
        ky_nodes, ky_weights = _ky_panels(frequency, z, quadrature)
        for kx, wx in zip(kx_nodes, kx_weights):
            for ky, wy in zip(ky_nodes, ky_weights):
                total += wx * wy * kernel(kx, ky)
    else:
        scale = z ** 3
        k_cover = (np.sqrt(kernel.slabs[0].eps) * kernel.k0).real
        shape = total.shape

        def packed(values: np.ndarray) -> np.ndarray:
            scaled = values * scale
            return np.concatenate([scaled.real.ravel(), scaled.imag.ravel()])

        def unpack(vector: np.ndarray) -> np.ndarray:
            half = vector.size // 2
            return (vector[:half] + 1j * vector[half:]).reshape(shape) / scale

        for kx, wx in zip(kx_nodes, kx_weights):
            kx_m = kx + 2.0 * math.pi * kernel.m / g.period
            branches = np.sort(np.sqrt(np.clip(k_cover ** 2 - kx_m ** 2, 0.0, None))[np.abs(kx_m) < k_cover])
            if branches.size:
                b = float(branches[-1])
                inner = [float(np.arcsin(v / b)) for v in branches[:-1] if 0 < v < b]
                window, err_w = quad_vec(lambda u: packed(kernel(kx, b * math.sin(u)) * b * math.cos(u)),
                                         0.0, 0.5 * math.pi, epsrel=quadrature.tolerance, limit=400,
                                         points=inner or None)
                tail, err_t = quad_vec(lambda s: packed(kernel(kx, math.hypot(b, s)) * s / math.hypot(b, s)),
                                       0.0, np.inf, epsrel=quadrature.tolerance, limit=400)
                contribution = unpack(window + tail)
            else:
                full, _ = quad_vec(lambda ky: packed(kernel(kx, ky)), 0.0, np.inf,
                                   epsrel=quadrature.tolerance, limit=400)
                contribution = unpack(full)
            total += wx * contribution

    # ky over (-inf, inf) folded onto [0, inf); odd components vanish
    values = 2.0 * 1j / (8.0 * math.pi ** 2) * total
    if kernel.floored:
        flags.append("kz-floor")
    return GratingGreenFourier(components=tuple(components), harmonics=np.arange(-(kernel.size - 1), kernel.size),
                               z=z, values=values, period=g.period, flags=flags)


def green_tensor_grating(x, z, g: GratingGeometry, axis: str, frequency: float, truncation: int = 15,
                         quadrature: Optional[QuadratureSpec] = None, library: Optional[MaterialLibrary] = None,
                         cache=None) -> np.ndarray:
    """
    Scattering Green tensor G(r, r) at r = (x, 0, z) above the grating.

    Returns:
        complex array of shape (n_x, n_z, 3, 3); xy and yz components vanish by symmetry
    """
    quadrature = quadrature or QuadratureSpec()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    fourier = _grating_green_fourier(g, axis, frequency, np.atleast_1d(z), truncation, quadrature, _FULL, library, cache)
    values = fourier.synthesize(x)
    tensor = np.zeros((len(x), values.shape[-1], 3, 3), dtype=complex)
    for c, (i, j) in enumerate(_FULL):
        tensor[:, :, i, j] = values[c]
    return tensor


@dataclass
class GratingCP:
    """CP maps of both states on the coarse z grid, with diagnostics."""
    x: np.ndarray
    z: np.ndarray
    u_5s: np.ndarray
    u_5p: np.ndarray
    truncation: int
    tail_ratio: float
    flags: List[str]


def cp_grating_coarse(g: GratingGeometry, x: np.ndarray, z: np.ndarray, quadrature: Optional[QuadratureSpec] = None,
                      rcwa: Optional[RcwaConfig] = None, atomic: Optional[AtomicData] = None,
                      library: Optional[MaterialLibrary] = None, threads: int = 1, cache=None) -> GratingCP:
    """5S and 5P CP potentials U(x, z) [J] on the given grid (one grating Green tensor per xi node)."""
    quadrature = quadrature or QuadratureSpec()
    rcwa = rcwa or RcwaConfig()
    atomic = atomic or load_atomic_data()
    library = library or load_materials()
    if g.cover != "vacuum":
        raise DomainError("grating CP assumes the atom sits in vacuum", {"cover": g.cover})
    z = _check_positions(z)
    x = np.asarray(x, dtype=float)
    d2 = atomic.table.d2
    flags: List[str] = []

    truncation = rcwa.truncation
    if rcwa.adaptive:
        truncation, conv_flags = converged_truncation(g, "real", d2.omega, rcwa.truncation, rcwa.max_truncation,
                                                      rcwa.convergence_tol, library)
        flags += conv_flags
    logger.info("grating CP: N=%d, %d z points, %d kx nodes", truncation, len(z), quadrature.n_kx)

    xi, w_xi = xi_quadrature(z.min(), z.max(), _omega_min(atomic, [GROUND, EXCITED]),
                             quadrature.grating_xi_panels_per_decade, quadrature.grating_xi_nodes_per_panel)
    alpha_s = atomic.dynamic_polarizability(GROUND, xi)
    alpha_p = atomic.dynamic_polarizability(EXCITED, xi)

    def trace_at(value: float) -> Tuple[np.ndarray, List[str]]:
        fourier = _grating_green_fourier(g, "imaginary", value, z, truncation, quadrature, _DIAGONAL, library, cache)
        return fourier.trace(x).real, fourier.flags

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        traces = list(executor.map(trace_at, xi))

    samples = np.stack([t for t, _ in traces])  # (n_xi, n_x, n_z)
    for _, f in traces:
        flags += [item for item in f if item not in flags]
    prefactor = HBAR * MU0 / (2.0 * math.pi)
    weights = w_xi * xi ** 2
    u_5s = prefactor * np.tensordot(weights * alpha_s, samples, axes=1)
    u_5p = prefactor * np.tensordot(weights * alpha_p, samples, axes=1)
    ratio = tail_ratio((weights * alpha_s)[:, None, None] * samples)
    if ratio > quadrature.tail_ratio:
        flags.append("flagged-quadrature")

    resonant = _grating_green_fourier(g, "real", d2.omega, z, truncation, quadrature, _DIAGONAL, library, cache)
    u_5p = u_5p - MU0 * d2.omega ** 2 * d2.dipole ** 2 / 3.0 * resonant.trace(x).real
    flags += [item for item in resonant.flags if item not in flags]
    return GratingCP(x=x, z=z, u_5s=u_5s, u_5p=u_5p, truncation=truncation, tail_ratio=ratio, flags=flags)


def resample_cubed(z_coarse: np.ndarray, values: np.ndarray, z_fine: np.ndarray) -> np.ndarray:
    """Interpolate z^3 U(z) in log z along the last axis, onto ``z_fine``."""
    spline = CubicSpline(np.log(z_coarse), values * z_coarse ** 3, axis=-1)
    return spline(np.log(z_fine)) / z_fine ** 3


def cp_grating_map(g: GratingGeometry, x: np.ndarray, z: np.ndarray, coarse_points: int = 96,
                   quadrature: Optional[QuadratureSpec] = None, rcwa: Optional[RcwaConfig] = None,
                   atomic: Optional[AtomicData] = None, library: Optional[MaterialLibrary] = None,
                   threads: int = 1, cache=None) -> Dict[str, PotentialMap]:
    """
    CP maps of 5S and 5P on the (x, z) dressing grid.

    The Green tensor is evaluated on ``coarse_points`` log-spaced heights and resampled.
    """
    z = _check_positions(z)
    z_coarse = np.geomspace(z.min(), z.max(), min(coarse_points, len(z)))
    coarse = cp_grating_coarse(g, x, z_coarse, quadrature, rcwa, atomic, library, threads, cache)
    metadata = {"geometry_hash": g.geometry_hash(), "truncation": coarse.truncation, "tail_ratio": coarse.tail_ratio,
                "quadrature": (quadrature or QuadratureSpec()).model_dump(), "coarse_points": len(z_coarse)}
    return {
        state: PotentialMap(x=np.asarray(x, dtype=float), z=z, values=resample_cubed(z_coarse, values, z),
                            period=g.period, label=f"U_CP {state}", flags=list(coarse.flags), metadata=dict(metadata))
        for state, values in ((GROUND, coarse.u_5s), (EXCITED, coarse.u_5p))
    }


def cp_grating(state: str, x_a: float, z_a: float, g: GratingGeometry, quadrature: Optional[QuadratureSpec] = None,
               rcwa: Optional[RcwaConfig] = None, atomic: Optional[AtomicData] = None,
               library: Optional[MaterialLibrary] = None) -> float:
    """State-resolved CP energy [J] at one point above the grating."""
    state = canonical_state(state)
    coarse = cp_grating_coarse(g, np.array([x_a]), np.array([z_a]), quadrature, rcwa, atomic, library)
    values = coarse.u_5s if state == GROUND else coarse.u_5p
    return float(values[0, 0])
