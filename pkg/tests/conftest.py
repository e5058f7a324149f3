import numpy as np
import pytest
from scipy import constants

from ddstrap.models.schemas import Layer, LayerStack, GratingGeometry
from ddstrap.services.cache_service import cache_service
from ddstrap.tools.atomic_data import load_atomic_data
from ddstrap.tools.materials import load_materials


@pytest.fixture(scope="session")
def atomic():
    return load_atomic_data()


@pytest.fixture(scope="session")
def library():
    return load_materials()


@pytest.fixture
def rb_mass(atomic):
    return atomic.atom.mass


@pytest.fixture
def optimized_stack():
    """158 nm SiO2 on 41 nm Au on Si, seen from vacuum."""
    return LayerStack(
        incidence="vacuum",
        layers=[Layer(material="SiO2", thickness=158e-9), Layer(material="Au", thickness=41e-9)],
        substrate="Si",
    )


@pytest.fixture
def ridge_grating():
    return GratingGeometry(
        period=100e-9, ridge_width=25e-9, ridge_height=500e-9, ridge_material="SiO2",
        layers=[Layer(material="Au", thickness=10e-9)], substrate="Si",
    )


@pytest.fixture(autouse=True)
def fresh_cache():
    cache_service.reset()
    yield
    cache_service.reset()


def harmonic_potential(z, mass, omega, center):
    return 0.5 * mass * omega ** 2 * (z - center) ** 2


MHZ = constants.h * 1e6
