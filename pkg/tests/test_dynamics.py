import math

import numpy as np
import pytest
from scipy import constants, integrate

from ddstrap.models.fields import BoundState
from ddstrap.models.schemas import DomainError, NotTrappedError
from ddstrap.tools.dynamics import (
    antidamping_rate,
    combined_lifetime,
    ground_state_itp,
    lifetime_budget,
    tau_adiabatic,
    tau_antidamping,
    tau_out,
    tau_tunnel,
    wkb_exponent,
)
from tests.conftest import harmonic_potential

HBAR = constants.hbar


def _barrier(height, start=40e-9, stop=60e-9):
    z = np.linspace(0.0, 100e-9, 10001)
    u = np.where((z > start) & (z < stop), height, 0.0)
    return z, u


def test_harmonic_ground_state(rb_mass):
    """Ensure ITP finds hbar omega / 2 and a minimum-uncertainty Gaussian."""
    omega = 2 * math.pi * 500e3
    z = np.linspace(20e-9, 180e-9, 4001)
    u = harmonic_potential(z, rb_mass, omega, 100e-9)
    bound = ground_state_itp(z, u, rb_mass, asymptote=0.0)
    assert bound.absolute_energy == pytest.approx(0.5 * HBAR * omega, rel=1e-4)
    assert bound.energy == pytest.approx(bound.absolute_energy)
    sigma = math.sqrt(HBAR / (2 * rb_mass * omega))
    assert bound.delta_z == pytest.approx(sigma, rel=1e-3)
    assert bound.delta_z * bound.delta_p >= 0.5 * HBAR * (1 - 1e-6)
    assert bound.delta_z * bound.delta_p == pytest.approx(0.5 * HBAR, rel=1e-3)
    assert integrate.trapezoid(bound.psi ** 2, bound.z) == pytest.approx(1.0, rel=1e-3)


def test_energy_history(rb_mass):
    """Ensure every propagation step records an energy."""
    omega = 2 * math.pi * 200e3
    z = np.linspace(0.0, 300e-9, 3001)
    u = harmonic_potential(z, rb_mass, omega, 150e-9)
    bound = ground_state_itp(z, u, rb_mass)
    assert bound.iterations == len(bound.energies) > 0
    assert bound.energies[-1] == pytest.approx(bound.absolute_energy)


def test_square_well_ground_state(rb_mass):
    """Ensure a deep flat well gives pi^2 hbar^2 / 2 m L^2."""
    width = 100e-9
    e1 = math.pi ** 2 * HBAR ** 2 / (2 * rb_mass * width ** 2)
    z = np.linspace(0.0, 120e-9, 12001)
    u = np.where((z > 10e-9) & (z < 110e-9), 0.0, 1e6 * e1)
    bound = ground_state_itp(z, u, rb_mass, asymptote=0.0, omega=e1 / HBAR, spacing=0.01e-9)
    assert bound.absolute_energy == pytest.approx(e1, rel=5e-3)


def test_unbound_state(rb_mass):
    """Ensure a level above the lower domain wall is not a trap."""
    omega = 2 * math.pi * 500e3
    z = np.linspace(99e-9, 101e-9, 201)
    u = harmonic_potential(z, rb_mass, omega, 100e-9)
    with pytest.raises(NotTrappedError):
        ground_state_itp(z, u, rb_mass, spacing=0.01e-9)


def test_narrow_domain(rb_mass):
    """Ensure a domain of a few grid steps is rejected."""
    z = np.linspace(0.0, 1e-9, 11)
    with pytest.raises(DomainError):
        ground_state_itp(z, np.zeros_like(z), rb_mass, spacing=0.5e-9)


def test_wkb_rectangular_barrier(rb_mass):
    """Ensure S = 2 (b - a) sqrt(2 m (V - E)) / hbar within 5%."""
    height = 2e-29
    energy = 1e-29
    z, u = _barrier(height)
    expected = 2 * 20e-9 * math.sqrt(2 * rb_mass * (height - energy)) / HBAR
    assert wkb_exponent(z, u, energy, rb_mass) == pytest.approx(expected, rel=0.05)


def test_wkb_without_barrier(rb_mass):
    """Ensure S = 0 when U stays below E."""
    z, u = _barrier(1e-30)
    assert wkb_exponent(z, u, 1e-29, rb_mass) == 0.0


def test_tunnel_time(rb_mass):
    """Ensure tau = exp(S) 2 pi / omega, with the barrier taken inside z_t."""
    z, u = _barrier(2e-29)
    omega = 2 * math.pi * 100e3
    tau, log10_tau, flags = tau_tunnel(z, u, 80e-9, 1e-29, omega, rb_mass)
    exponent = wkb_exponent(z[z <= 80e-9], u[z <= 80e-9], 1e-29, rb_mass)
    assert tau == pytest.approx(math.exp(exponent) * 2 * math.pi / omega, rel=1e-9)
    assert log10_tau == pytest.approx(math.log10(tau))
    assert flags == []

    tau, log10_tau, flags = tau_tunnel(z, u, 30e-9, 1e-29, omega, rb_mass)
    assert tau == 0.0
    assert log10_tau == -math.inf
    assert flags == ["no-forbidden-region"]


def test_characteristic_times(rb_mass):
    """Ensure the closed-form exit, anti-damping and adiabatic times."""
    k_eff = 2 * math.pi / 780.24e-9
    e_g = -1e-29
    recoil_heating = HBAR ** 2 * k_eff ** 2 / (2 * rb_mass) * 1e3
    assert tau_out(1e3, e_g, k_eff, rb_mass) == pytest.approx(1e-29 / recoil_heating)
    assert tau_out(0.0, e_g, k_eff, rb_mass) == math.inf

    delta_p = 1e-27
    kinetic = delta_p ** 2 / (2 * rb_mass)
    assert tau_antidamping(50.0, e_g, delta_p, rb_mass) == pytest.approx(math.log((1e-29 + kinetic) / kinetic) / 100.0)
    assert tau_antidamping(-1.0, e_g, delta_p, rb_mass) == math.inf
    assert tau_adiabatic(1e-8, delta_p, rb_mass) == pytest.approx(rb_mass * 1e-8 / delta_p)


def test_antidamping_sign(atomic, rb_mass):
    """Ensure the rate is positive when Delta, U_5P' and Delta' combine to heat."""
    gamma0, k0 = atomic.atom.gamma0, atomic.atom.k0
    heating = antidamping_rate(2 * math.pi * 20e6, -1e14, 1e-21, 1e5, gamma0, k0, rb_mass)
    cooling = antidamping_rate(2 * math.pi * 20e6, 1e14, 1e-21, 1e5, gamma0, k0, rb_mass)
    assert heating > 0
    assert cooling == pytest.approx(-heating)


def test_antidamping_rate_energy_gradient_form(atomic, rb_mass):
    """Ensure beta uses dU_5P/dz in J/m over hbar k0^2 |Delta_c|^4 and scales linearly in each gradient."""
    gamma0, k0 = atomic.atom.gamma0, atomic.atom.k0
    delta, ddelta, du_5p, gamma_sc = 2 * math.pi * 20e6, -1e14, 1e-21, 1e5
    omega_r = HBAR * k0 ** 2 / (2 * rb_mass)
    delta_c = complex(delta, gamma0 / 2)
    expected = -4 * omega_r * delta * gamma_sc / (HBAR * k0 ** 2 * abs(delta_c) ** 4) * du_5p * ddelta
    beta = antidamping_rate(delta, ddelta, du_5p, gamma_sc, gamma0, k0, rb_mass)
    assert beta == pytest.approx(expected, rel=1e-12)
    assert antidamping_rate(delta, ddelta, 2 * du_5p, gamma_sc, gamma0, k0, rb_mass) == pytest.approx(2 * beta)
    assert isinstance(beta, float)


def test_combined_lifetime():
    """Ensure rates add and infinite times drop out."""
    assert combined_lifetime(2.0, 2.0) == pytest.approx(1.0)
    assert combined_lifetime(3.0, math.inf) == pytest.approx(3.0)
    assert combined_lifetime(math.inf, math.inf) == math.inf


@pytest.fixture
def bound_state():
    z = np.linspace(60e-9, 100e-9, 41)
    return BoundState(energy=-1e-29, absolute_energy=1e-29, z=z, psi=np.ones_like(z), delta_z=5e-9,
                      delta_p=HBAR / (2 * 5e-9))


def test_lifetime_budget(atomic, rb_mass, bound_state):
    """Ensure the budget combines its times and reports the scattering rate."""
    z, u = _barrier(2e-29)
    budget = lifetime_budget(bound_state, z, u, 80e-9, 2 * math.pi * 100e3, 0.01, 2 * math.pi * 20e6, -1e14,
                             1e-21, atomic.atom.gamma0, atomic.atom.k0, rb_mass)
    assert budget.gamma_sc == pytest.approx(0.01 * atomic.atom.gamma0)
    assert budget.beta > 0
    expected = 1.0 / (1.0 / budget.tau_out + 1.0 / budget.tau_antidamping + 1.0 / budget.tau_tunnel)
    assert budget.tau == pytest.approx(expected)
    assert budget.tau_adiabatic == pytest.approx(rb_mass * 5e-9 / bound_state.delta_p)
    assert "damping-side" not in budget.flags


def test_lifetime_budget_reference(atomic, rb_mass, bound_state):
    """Ensure the asymptote reference tunnels at U(z_t) + |E_g| and unknown references fail."""
    z, u = _barrier(2e-29)
    args = (bound_state, z, u, 80e-9, 2 * math.pi * 100e3, 0.01, 2 * math.pi * 20e6, 1e14, 1e-21,
            atomic.atom.gamma0, atomic.atom.k0, rb_mass)
    budget = lifetime_budget(*args, energy_reference="asymptote")
    assert "damping-side" in budget.flags
    assert budget.tau_antidamping == math.inf
    with pytest.raises(DomainError):
        lifetime_budget(*args, energy_reference="barrier")
