import math

import numpy as np
import pytest

from ddstrap.models.schemas import DomainError, GratingGeometry, Layer, LayerStack, QuadratureSpec, RcwaConfig
from ddstrap.tools.atomic_data import EXCITED, GROUND
from ddstrap.tools.casimir_polder import (
    PerfectMirror,
    cp_grating,
    cp_nonresonant_planar,
    cp_planar,
    cp_planar_curve,
    cp_resonant_planar,
    green_tensor_grating,
    perfect_mirror_c3,
    perfect_mirror_far_field,
    resample_cubed,
    resonant_green_trace,
    xi_quadrature,
)
from ddstrap.tools.stratified import planar_green_tensor

MIRROR = PerfectMirror()


def _log_slope(state, z_lo, z_hi, atomic):
    z = np.geomspace(z_lo, z_hi, 6)
    values = cp_nonresonant_planar(state, z, MIRROR, atomic=atomic).energy
    return np.polyfit(np.log(z), np.log(np.abs(values)), 1)[0]


def test_xi_quadrature_integrates_lorentzian():
    """Ensure the log-panel rule integrates 1 / (1 + (xi / w)^2)^2 over the half line."""
    omega = 2.4e15
    xi, w = xi_quadrature(1e-9, 1e-5, omega, 4, 8)
    assert w @ (1.0 / (1.0 + (xi / omega) ** 2) ** 2) == pytest.approx(0.25 * math.pi * omega, rel=1e-6)


def test_perfect_mirror_near_field_matches_c3(atomic):
    """Ensure z^3 U tends to -C3 close to a perfect mirror."""
    z = 1e-9
    energy = cp_nonresonant_planar(GROUND, z, MIRROR, atomic=atomic).energy[0]
    assert energy * z ** 3 == pytest.approx(-perfect_mirror_c3(GROUND, atomic), rel=2e-3)


def test_perfect_mirror_far_field_limit(atomic):
    """Ensure the retarded -1/z^4 law is reached far from the mirror."""
    z = 20e-6
    energy = cp_nonresonant_planar(GROUND, z, MIRROR, atomic=atomic).energy[0]
    assert energy == pytest.approx(perfect_mirror_far_field(GROUND, z, atomic), rel=1e-2)


def test_perfect_mirror_power_laws(atomic):
    """Ensure the log-slope is -3 over 5-15 nm and -4 over 3-10 um."""
    assert _log_slope(GROUND, 5e-9, 15e-9, atomic) == pytest.approx(-3.0, abs=0.02)
    assert _log_slope(GROUND, 3e-6, 10e-6, atomic) == pytest.approx(-4.0, abs=0.02)


def test_dielectric_is_weaker_than_mirror(atomic, library):
    """Ensure a silica half-space attracts less than a perfect mirror."""
    silica = LayerStack(incidence="vacuum", layers=[], substrate="SiO2")
    z = np.array([5e-9, 50e-9, 500e-9])
    dielectric = cp_nonresonant_planar(GROUND, z, silica, atomic=atomic, library=library).energy
    mirror = cp_nonresonant_planar(GROUND, z, MIRROR, atomic=atomic).energy
    assert np.all(dielectric < 0)
    assert np.all(dielectric / mirror > 0)
    assert np.all(dielectric / mirror < 1)


def test_ground_curve_is_attractive_and_monotonic(atomic, library, optimized_stack):
    """Ensure U_5S is negative and rises towards zero away from the surface."""
    z = np.geomspace(20e-9, 1e-6, 12)
    curve = cp_planar_curve(GROUND, z, optimized_stack, atomic=atomic, library=library)
    assert np.all(curve.values < 0)
    assert np.all(np.diff(curve.values) > 0)
    assert curve.metadata["geometry_hash"] == optimized_stack.geometry_hash()
    assert curve.flags == []


def test_tail_flag_is_raised(atomic):
    """Ensure a quadrature stricter than the sampled integrand flags the result."""
    strict = QuadratureSpec(tail_ratio=0.0)
    result = cp_nonresonant_planar(GROUND, 100e-9, MIRROR, quadrature=strict, atomic=atomic)
    assert "flagged-quadrature" in result.flags
    assert result.flagged


def test_resonant_trace_near_mirror(atomic):
    """Ensure Tr G above a perfect mirror approaches 1 / (8 pi k^2 z^3)."""
    omega = atomic.table.d2.omega
    k0 = omega / 2.99792458e8
    z = 1e-9
    trace = resonant_green_trace(z, MIRROR, omega)[0]
    assert trace * 8.0 * math.pi * k0 ** 2 * z ** 3 == pytest.approx(1.0, rel=1e-3)


def test_resonant_energy_near_mirror(atomic):
    """Ensure the D2 term tends to -d^2 / (24 pi eps0 z^3) close to a perfect mirror."""
    d2 = atomic.table.d2
    z = 1e-9
    energy = cp_resonant_planar(z, MIRROR, atomic=atomic).energy[0]
    expected = -d2.dipole ** 2 / (24.0 * math.pi * 8.8541878128e-12 * z ** 3)
    assert energy == pytest.approx(expected, rel=1e-3)


def test_resonant_trace_agrees_with_green_tensor(atomic, library, optimized_stack):
    """Ensure the resonant trace equals the trace of the full planar Green tensor."""
    omega = atomic.table.d2.omega
    z = np.array([30e-9, 200e-9])
    trace = resonant_green_trace(z, optimized_stack, omega, library=library)
    tensor = planar_green_tensor(z, optimized_stack, "real", omega, library=library)
    assert trace == pytest.approx(np.trace(tensor, axis1=1, axis2=2).real, rel=1e-6)


def test_excited_state_includes_resonant_part(atomic, library, optimized_stack):
    """Ensure the 5P energy differs from its non-resonant part by the D2 term."""
    z = np.array([100e-9])
    full = cp_planar(EXCITED, z, optimized_stack, atomic=atomic, library=library).energy
    nonresonant = cp_nonresonant_planar(EXCITED, z, optimized_stack, atomic=atomic, library=library).energy
    assert not np.allclose(full, nonresonant)


def test_non_positive_distance(atomic):
    """Ensure z <= 0 is a domain error."""
    with pytest.raises(DomainError):
        cp_nonresonant_planar(GROUND, np.array([0.0, 1e-8]), MIRROR, atomic=atomic)


def test_resample_cubed_is_exact_for_inverse_cube():
    """Ensure c / z^3 survives resampling unchanged."""
    z_coarse = np.geomspace(1e-8, 1e-6, 8)
    z_fine = np.geomspace(1e-8, 1e-6, 50)
    values = np.vstack([-2.0 / z_coarse ** 3, -3.0 / z_coarse ** 3])
    fine = resample_cubed(z_coarse, values, z_fine)
    assert fine[1] == pytest.approx(-3.0 / z_fine ** 3, rel=1e-10)


@pytest.mark.acceptance
def test_flat_grating_matches_planar(atomic, library):
    """Ensure a contrast-free grating gives the planar 5S potential."""
    flat = GratingGeometry(period=100e-9, ridge_width=25e-9, ridge_height=500e-9, ridge_material="SiO2",
                           groove_material="SiO2", layers=[Layer(material="Au", thickness=10e-9)], substrate="Si")
    z = 100e-9
    grating = cp_grating(GROUND, 0.0, z, flat, rcwa=RcwaConfig(truncation=3, adaptive=False), atomic=atomic,
                         library=library)
    planar = cp_nonresonant_planar(GROUND, z, flat.uniform_stack("SiO2"), atomic=atomic, library=library).energy[0]
    assert grating == pytest.approx(planar, rel=2e-2)


@pytest.mark.acceptance
def test_flat_grating_green_tensor_matches_planar(library):
    """Ensure a contrast-free grating gives the planar Green tensor on the imaginary axis."""
    flat = GratingGeometry(period=100e-9, ridge_width=25e-9, ridge_height=500e-9, ridge_material="SiO2",
                           groove_material="SiO2", layers=[Layer(material="Au", thickness=10e-9)], substrate="Si")
    xi = 1e15
    z = np.array([50e-9])
    grating = green_tensor_grating(np.array([0.0, 30e-9]), z, flat, "imaginary", xi, truncation=3, library=library)
    planar = planar_green_tensor(z, flat.uniform_stack("SiO2"), "imaginary", xi, library=library)[0]
    for i in range(3):
        assert grating[0, 0, i, i].real == pytest.approx(planar[i, i].real, rel=1e-3)
        assert grating[1, 0, i, i].real == pytest.approx(planar[i, i].real, rel=1e-3)


def test_excited_potential_oscillates_far_from_surface(atomic, library, optimized_stack):
    """Ensure the 5P potential changes sign every quarter D2 wavelength in the far field while 5S stays attractive."""
    z = np.linspace(300e-9, 2e-6, 60)
    u_5p = cp_planar(EXCITED, z, optimized_stack, atomic=atomic, library=library).energy
    u_5s = cp_planar(GROUND, z, optimized_stack, atomic=atomic, library=library).energy
    assert np.all(u_5s < 0)
    crossings = np.flatnonzero(np.diff(np.sign(u_5p)) != 0)
    assert len(crossings) >= 4
    roots = [z[i] - u_5p[i] * (z[i + 1] - z[i]) / (u_5p[i + 1] - u_5p[i]) for i in crossings]
    assert np.mean(np.diff(roots)) == pytest.approx(atomic.table.d2.wavelength / 4, rel=0.2)


def test_grating_green_tensor_is_periodic_and_mirror_symmetric(library, ridge_grating):
    """Ensure G repeats with the period, its diagonal is even in x and its xz part is odd."""
    quadrature = QuadratureSpec(n_kx=2, ky_panels=3, ky_nodes_per_panel=3)
    x = np.array([20e-9, -20e-9, 20e-9 + ridge_grating.period])
    tensor = green_tensor_grating(x, np.array([40e-9]), ridge_grating, "imaginary", 1e15, truncation=3,
                                  quadrature=quadrature, library=library)
    scale = np.max(np.abs(tensor))
    assert np.allclose(tensor[2], tensor[0], rtol=1e-9, atol=1e-12 * scale)
    for i in range(3):
        assert tensor[1, 0, i, i] == pytest.approx(tensor[0, 0, i, i], rel=1e-8)
    assert tensor[1, 0, 0, 2] == pytest.approx(-tensor[0, 0, 0, 2], abs=1e-8 * scale)
    assert tensor[1, 0, 2, 0] == pytest.approx(-tensor[0, 0, 2, 0], abs=1e-8 * scale)
