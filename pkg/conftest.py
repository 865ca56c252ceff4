# conftest.py
import math
import os

import pytest

from app.ground_state import ground_state
from app.schemas import DickeParams, QuadratureSpec
from app.variational import equilibrium


@pytest.fixture(scope="session", autouse=True)
def setup_test_env(tmp_path_factory):
    """Configura variables de entorno para tests."""
    os.environ["DICKE_CACHE_DIR"] = str(tmp_path_factory.mktemp("dicke_cache"))
    os.environ["DATABASE_URL"] = "sqlite:///:memory:"
    os.environ["DICKE_LOG_LEVEL"] = "DEBUG"
    yield


@pytest.fixture
def quad():
    """Cuadratura por defecto (Gauss-Hermite, 48 nodos por eje)."""
    return QuadratureSpec()


@pytest.fixture
def small_params():
    """Parámetros pequeños en la fase superradiante (λ_c = 0.5)."""
    return DickeParams(omega=1.0, omega0=1.0, lam=0.8, two_j=4, n_cut=30)


@pytest.fixture(scope="session")
def vacuum_state():
    """Estado fundamental desacoplado: |0⟩ ⊗ |j, −j⟩."""
    return ground_state(DickeParams(lam=0.0, two_j=4, n_cut=10))


@pytest.fixture(scope="session")
def superradiant_state():
    """Estado fundamental con 2j = 4, λ = 0.8 y corte holgado."""
    return ground_state(DickeParams(lam=0.8, two_j=4, n_cut=30))


@pytest.fixture(scope="session")
def resonant_state():
    """Estado pequeño para comparar caminos de cálculo de las marginales."""
    return ground_state(DickeParams(lam=0.8, two_j=2, n_cut=14))


@pytest.fixture(scope="session")
def converged_state():
    """Estado en resonancia con corte 30 + 3⌈α_e²⌉, compartido entre tests."""
    states = {}

    def build(lam: float, two_j: int):
        if (lam, two_j) not in states:
            alpha_e = equilibrium(DickeParams(lam=lam, two_j=two_j)).alpha_e
            n_cut = 30 + 3 * math.ceil(alpha_e ** 2)
            states[(lam, two_j)] = ground_state(DickeParams(lam=lam, two_j=two_j, n_cut=n_cut))
        return states[(lam, two_j)]

    return build
