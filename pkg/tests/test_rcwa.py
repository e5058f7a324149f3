import math

import numpy as np
import pytest
from scipy import constants

from ddstrap.models.schemas import DomainError, GratingGeometry, Layer
from ddstrap.tools.rcwa import (
    S,
    P,
    averaged_two_beam_intensity,
    fourier_coefficients,
    grating_field_map,
    orders,
    rcwa_reflection,
    toeplitz_matrix,
)
from ddstrap.tools.stratified import PlaneWaveQuery, reflection_coefficient

OMEGA = 2 * math.pi * constants.c / 1529.34e-9


@pytest.fixture
def flat_grating():
    """Grating layer filled with SiO2 on both sides of the ridge boundary."""
    return GratingGeometry(
        period=100e-9, ridge_width=25e-9, ridge_height=500e-9, ridge_material="SiO2", groove_material="SiO2",
        layers=[Layer(material="Au", thickness=10e-9)], substrate="Si",
    )


@pytest.fixture
def dielectric_grating():
    return GratingGeometry(period=100e-9, ridge_width=25e-9, ridge_height=200e-9, ridge_material="SiO2",
                           layers=[], substrate="Si")


def test_fourier_coefficients_of_ridge():
    """Ensure the zeroth coefficient is the fill-weighted average and the series is even."""
    coeffs = fourier_coefficients(4.0, 1.0, 0.25, 5)
    assert coeffs[5] == pytest.approx(0.25 * 4.0 + 0.75 * 1.0)
    assert coeffs[6] == pytest.approx(coeffs[4])
    assert coeffs[6] == pytest.approx(3.0 * math.sin(0.25 * math.pi) / math.pi)


def test_toeplitz_layout():
    """Ensure [[f]]_mn = f_(m-n)."""
    coeffs = np.arange(-2, 3).astype(complex)  # f_h = h
    mat = toeplitz_matrix(coeffs, 3)
    for m in range(3):
        for n in range(3):
            assert mat[m, n] == m - n


def test_orders():
    """Ensure orders run from -N to N."""
    assert list(orders(2)) == [-2, -1, 0, 1, 2]


@pytest.mark.parametrize("axis,frequency", [("real", OMEGA), ("imaginary", 2e15)])
@pytest.mark.parametrize("kx_fraction,ky", [(0.0, 0.0), (0.03, 0.0), (0.02, 3e6)])
def test_zero_contrast_matches_transfer_matrix(library, flat_grating, axis, frequency, kx_fraction, ky):
    """Ensure a contrast-free grating reproduces the planar r_s and r_p."""
    kx = kx_fraction * math.pi / flat_grating.period
    result = rcwa_reflection(flat_grating, axis, frequency, kx, ky, truncation=3, library=library)
    stack = flat_grating.uniform_stack("SiO2")
    k_par = math.hypot(kx, ky)
    r_s = reflection_coefficient(stack, PlaneWaveQuery(axis, frequency, k_par, "s"), library)
    r_p = reflection_coefficient(stack, PlaneWaveQuery(axis, frequency, k_par, "p"), library)
    block = result.zero_order()
    assert block[S, S] == pytest.approx(r_s, abs=1e-8)
    assert block[P, P] == pytest.approx(r_p, abs=1e-8)
    assert abs(block[S, P]) < 1e-8
    assert abs(block[P, S]) < 1e-8


def test_truncation_self_convergence(library, dielectric_grating):
    """Ensure doubling N changes the specular block by less than 1e-4."""
    kx = 0.1 * math.pi / dielectric_grating.period
    coarse = rcwa_reflection(dielectric_grating, "real", OMEGA, kx, 0.0, truncation=15, library=library)
    fine = rcwa_reflection(dielectric_grating, "real", OMEGA, kx, 0.0, truncation=30, library=library)
    assert np.max(np.abs(fine.zero_order() - coarse.zero_order())) < 1e-4


def test_lossless_grating_conserves_energy(library, dielectric_grating):
    """Ensure reflected plus transmitted efficiencies add up to one without loss."""
    kx = math.sin(math.radians(20.0)) * OMEGA / constants.c
    result = rcwa_reflection(dielectric_grating, "real", OMEGA, kx, 0.0, truncation=10, with_transmission=True,
                             library=library)
    for sigma in (S, P):
        refl, trans = result.efficiencies(sigma)
        assert refl.sum() + trans.sum() == pytest.approx(1.0, abs=1e-8)


def test_imaginary_axis_reflection_is_real(library, dielectric_grating):
    """Ensure reflection matrices at imaginary frequency carry no imaginary residual."""
    result = rcwa_reflection(dielectric_grating, "imaginary", 1e15, 0.2 * math.pi / 100e-9, 1e7, truncation=8,
                             library=library)
    assert "imaginary-residual" not in result.flags
    assert np.all(result.data.imag == 0)


def test_argument_checks(library, dielectric_grating):
    """Ensure N < 1 and k_x outside the Brillouin zone are domain errors."""
    with pytest.raises(DomainError):
        rcwa_reflection(dielectric_grating, "real", OMEGA, 0.0, 0.0, truncation=0, library=library)
    with pytest.raises(DomainError):
        rcwa_reflection(dielectric_grating, "real", OMEGA, 1.01 * math.pi / 100e-9, 0.0, truncation=5, library=library)


def test_adaptive_truncation_reports_convergence(library, dielectric_grating):
    """Ensure the adaptive policy raises N and records the order it stopped at."""
    result = rcwa_reflection(dielectric_grating, "real", OMEGA, 0.0, 0.0, truncation=5, adaptive=True,
                             max_truncation=30, convergence_tol=1e-3, library=library)
    assert result.truncation > 5
    assert any(flag.startswith("converged-N=") for flag in result.flags)


def test_front_field_map_is_periodic(library, dielectric_grating):
    """Ensure the intensity map repeats with the grating period."""
    x = np.array([-30e-9, 70e-9])
    z = np.array([20e-9, 60e-9])
    field_map = grating_field_map(dielectric_grating, 1529.34e-9, "front", 1.0, 200e-6, 0.0, truncation=8,
                                  x=x, z=z, library=library)
    assert field_map.intensity[0] == pytest.approx(field_map.intensity[1], rel=1e-9)


def test_two_beam_intensity_without_front_beam(library, dielectric_grating):
    """Ensure alpha = 0 leaves only the back-illuminated map."""
    x = np.array([0.0, 50e-9])
    z = np.array([20e-9, 60e-9])
    angle = math.radians(20.0)
    back = grating_field_map(dielectric_grating, 1529.34e-9, "back", 1.0, 200e-6, angle, truncation=8,
                             x=x, z=z, library=library)
    total = averaged_two_beam_intensity(dielectric_grating, 1529.34e-9, 1.0, 0.0, angle, truncation=8,
                                        x=x, z=z, library=library)
    assert total.intensity == pytest.approx(back.intensity, rel=1e-12)


def test_two_beam_intensity_rejects_negative_ratio(library, dielectric_grating):
    with pytest.raises(DomainError):
        averaged_two_beam_intensity(dielectric_grating, 1529.34e-9, 1.0, -0.5, 0.3, library=library)


def test_reflection_is_reciprocal(library, ridge_grating):
    """Ensure r_mn(kx) kz_m = r_(-n)(-m)(-kx) kz_n for s waves on an absorbing grating."""
    kx = 0.3 * math.pi / ridge_grating.period
    forward = rcwa_reflection(ridge_grating, "real", OMEGA, kx, 0.0, truncation=5, library=library)
    backward = rcwa_reflection(ridge_grating, "real", OMEGA, -kx, 0.0, truncation=5, library=library)
    scale = np.max(np.abs(forward.data[S, :, S, :] * forward.kz[:, None]))
    for m in range(-3, 4):
        for n in range(-3, 4):
            lhs = forward.element(m, S, n, S) * forward.kz[forward.index(m)]
            rhs = backward.element(-n, S, -m, S) * backward.kz[backward.index(-n)]
            assert lhs == pytest.approx(rhs, abs=1e-8 * scale)


def test_energy_balance_with_loss_and_conical_incidence(library, dielectric_grating, ridge_grating):
    """Ensure R + T = 1 for a lossless grating off the incidence plane and R + T < 1 once gold absorbs."""
    k0 = OMEGA / constants.c
    conical = rcwa_reflection(dielectric_grating, "real", OMEGA, 0.2 * k0, 0.3 * k0, truncation=10,
                              with_transmission=True, library=library)
    for sigma in (S, P):
        refl, trans = conical.efficiencies(sigma)
        assert refl.sum() + trans.sum() == pytest.approx(1.0, abs=1e-8)
    lossy = rcwa_reflection(ridge_grating, "real", OMEGA, 0.2 * k0, 0.0, truncation=10, with_transmission=True,
                            library=library)
    for sigma in (S, P):
        refl, trans = lossy.efficiencies(sigma)
        assert 0.0 < refl.sum() + trans.sum() < 1.0
