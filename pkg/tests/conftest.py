import numpy as np
import pytest

from phasecat import GridSpec, Potential, scattering_matrix, staggered_k_grid

BOX = GridSpec(-20.0, 20.0, 2048)
K_STANDARD = staggered_k_grid(12.0, 256)
# Born-regime grid: keeps |k| >= 0.5 where the plane-wave expansion of the
# reflection is controlled by m_norm/|k|
K_BORN = staggered_k_grid(8.0, 16)
K_FINE = staggered_k_grid(12.0, 960)


def sech2(x):
    return 1.0 / np.cosh(x) ** 2


@pytest.fixture(scope="session")
def box():
    return BOX


@pytest.fixture(scope="session")
def sech2_potential():
    return Potential.from_callable(BOX, lambda x: -2.0 * sech2(x))


@pytest.fixture(scope="session")
def sech2_sd(sech2_potential):
    return scattering_matrix(sech2_potential, K_STANDARD)


@pytest.fixture(scope="session")
def sech6_potential():
    return Potential.from_callable(BOX, lambda x: -6.0 * sech2(x))


@pytest.fixture(scope="session")
def sech6_sd(sech6_potential):
    return scattering_matrix(sech6_potential, K_STANDARD)


@pytest.fixture(scope="session")
def well_potential():
    # edges on grid nodes: a = 51 h
    a = 51 * BOX.spacing
    return Potential.from_callable(BOX, lambda x: np.where(np.abs(x) <= a, -1.0, 0.0))


@pytest.fixture(scope="session")
def well_sd(well_potential):
    return scattering_matrix(well_potential, K_STANDARD)


def weak_gaussian(amplitude):
    return Potential.from_callable(BOX, lambda x: amplitude * np.exp(-(x**2)))


@pytest.fixture(scope="session")
def gauss01_potential():
    return weak_gaussian(0.1)


@pytest.fixture(scope="session")
def gauss01_sd_fine(gauss01_potential):
    """Dense k-grid scattering data for the dispersion and inversion checks."""
    return scattering_matrix(gauss01_potential, K_FINE)


@pytest.fixture(scope="session")
def gauss_born_sds():
    """amplitude -> (potential, scattering data) on the Born-regime grid."""
    out = {}
    for a in (0.01, 0.05, 0.1):
        q = weak_gaussian(a)
        out[a] = (q, scattering_matrix(q, K_BORN, with_bound_states=False))
    return out
