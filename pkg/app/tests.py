import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from app import crud
from app.config import get_cache_dir, get_database_url, get_max_dimension
from app.eigensolver import dense_lowest, lanczos_lowest, lowest_eigenpair, solve_lowest
from app.exceptions import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    ConfigError,
    ConvergenceError,
    DimensionOverflowError,
    DomainError,
    EigensolverError,
    NormalizationError,
    ResonanceError,
)
from app.ground_state import convergence_study, converge_cutoff, ground_state, numeric_wavefunction
from app.hamiltonian import (
    assemble_hamiltonian,
    build_basis,
    critical_coupling,
    even_block_indices,
    matrix_element,
    parity_operator,
    parity_sign,
)
from app.middleware import handle_errors, task_logging
from app.models import Base
from app.schemas import (
    BasisState,
    DickeParams,
    EquilibriumConfig,
    GroundState,
    MeasureReport,
    QuadratureSpec,
    SweepConfig,
)
from app.utils import (
    default_lambda_grid,
    format_decimal,
    frange,
    moment_column,
    near_critical,
    parse_cell,
    parse_lambda_grid,
)
from app.variational import ground_energy_variational

# Base de datos en memoria para tests
SQLALCHEMY_DATABASE_URL = "sqlite:///:memory:"

engine = create_engine(
    SQLALCHEMY_DATABASE_URL,
    connect_args={"check_same_thread": False},
    poolclass=StaticPool,
)
TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


@pytest.fixture(autouse=True)
def setup_database():
    """Crea las tablas antes de cada test y las elimina después."""
    Base.metadata.create_all(bind=engine)
    yield
    Base.metadata.drop_all(bind=engine)


@pytest.fixture
def db():
    session = TestingSessionLocal()
    try:
        yield session
    finally:
        session.close()


def sample_row(lam: float, channel: str = "numeric", error: str = "") -> dict:
    """Fila plana como las que produce el barrido."""
    if error:
        return {"channel": channel, "lambda": lam, "two_j": 4, "n_cut": None,
                "P": math.nan, "W": math.nan, "error": error}
    return {"channel": channel, "lambda": lam, "two_j": 4, "n_cut": 20,
            "P": 0.25, "W": 2.0, "M_2": 0.25, "error": ""}


# ===== TESTS DE BASE Y HAMILTONIANO =====
def test_critical_coupling():
    """Test de λ_c = sqrt(ωω₀)/2."""
    assert critical_coupling(DickeParams(two_j=2)) == 0.5
    assert critical_coupling(DickeParams(omega=4.0, omega0=1.0, two_j=2)) == 1.0


def test_basis_order_and_index():
    """Test del orden lexicográfico de la base truncada."""
    basis = build_basis(DickeParams(two_j=2, n_cut=1))
    assert len(basis) == 6
    assert basis.states == [
        BasisState(0, 0), BasisState(0, 1), BasisState(0, 2),
        BasisState(1, 0), BasisState(1, 1), BasisState(1, 2),
    ]
    assert basis[4] == BasisState(1, 1)
    assert basis.index(BasisState(1, 2)) == 5


def test_basis_out_of_range():
    """Test de error con estados fuera de la base."""
    basis = build_basis(DickeParams(two_j=2, n_cut=1))
    with pytest.raises(IndexError):
        basis[6]
    with pytest.raises(IndexError):
        basis.index(BasisState(2, 0))
    with pytest.raises(IndexError):
        matrix_element(BasisState(0, 3), BasisState(0, 0), DickeParams(two_j=2, n_cut=1))


def test_parity_sign():
    """Test del autovalor de paridad."""
    assert parity_sign(0, 0) == 1
    assert parity_sign(1, 0) == -1
    assert parity_sign(1, 1) == 1
    assert parity_sign(2, 3) == -1


def test_matrix_element_values():
    """Test de elementos diagonales y de acoplamiento."""
    params = DickeParams(lam=1.0, two_j=2, n_cut=3)
    # n ω + m ω₀ con m = m_index − j
    assert matrix_element(BasisState(2, 0), BasisState(2, 0), params) == pytest.approx(1.0)
    assert matrix_element(BasisState(1, 1), BasisState(0, 0), params) == pytest.approx(1.0)
    assert matrix_element(BasisState(2, 1), BasisState(0, 0), params) == 0.0
    assert matrix_element(BasisState(1, 0), BasisState(0, 0), params) == 0.0


def test_matrix_element_symmetric():
    """Test de simetría ⟨a|H|b⟩ = ⟨b|H|a⟩."""
    params = DickeParams(lam=0.7, two_j=3, n_cut=3)
    basis = build_basis(params)
    for bra in basis:
        for ket in basis:
            assert matrix_element(bra, ket, params) == pytest.approx(matrix_element(ket, bra, params))


def test_assemble_matches_matrix_element():
    """Test de la matriz dispersa contra los elementos individuales."""
    params = DickeParams(lam=0.9, two_j=2, n_cut=3)
    H = assemble_hamiltonian(params).toarray()
    basis = build_basis(params)
    for i, bra in enumerate(basis):
        for j, ket in enumerate(basis):
            assert H[i, j] == pytest.approx(matrix_element(bra, ket, params), abs=1e-14)


def test_assemble_sparsity_and_parity():
    """Test de a lo sumo 5 no nulos por fila y conmutación con la paridad."""
    params = DickeParams(lam=0.6, two_j=6, n_cut=12)
    H = assemble_hamiltonian(params)
    assert (H - H.T).count_nonzero() == 0
    assert np.diff(H.indptr).max() <= 5
    Pi = parity_operator(params)
    assert abs(Pi @ H - H @ Pi).max() == 0.0


def test_assemble_uncoupled_is_diagonal():
    """Test de λ = 0: el hamiltoniano es diagonal."""
    H = assemble_hamiltonian(DickeParams(lam=0.0, two_j=4, n_cut=5))
    assert np.allclose(H.toarray(), np.diag(H.diagonal()))


def test_dimension_overflow():
    """Test de error cuando la base supera el tope."""
    params = DickeParams(lam=0.5, two_j=4, n_cut=20)
    with pytest.raises(DimensionOverflowError) as exc:
        assemble_hamiltonian(params, max_dimension=50)
    assert exc.value.dimension == 105
    assert exc.value.exit_code == EXIT_CONFIG


def test_dimension_overflow_from_env(monkeypatch):
    """Test del tope leído de DICKE_MAX_DIMENSION."""
    monkeypatch.setenv("DICKE_MAX_DIMENSION", "10")
    assert get_max_dimension() == 10
    with pytest.raises(DimensionOverflowError):
        assemble_hamiltonian(DickeParams(two_j=4, n_cut=5))


# ===== TESTS DE AUTOVALORES =====
def test_lanczos_matches_dense():
    """Test de Lanczos contra la diagonalización densa."""
    params = DickeParams(lam=0.7, two_j=4, n_cut=20)
    H = assemble_hamiltonian(params)
    exact = np.linalg.eigvalsh(H.toarray())[0]
    result = lanczos_lowest(H, tol=1e-10)
    assert result.method == "lanczos"
    assert result.energy == pytest.approx(exact, abs=1e-9)
    assert dense_lowest(H).energy == pytest.approx(exact, abs=1e-9)


def test_lanczos_random_symmetric():
    """Test de Lanczos sobre una matriz simétrica aleatoria con semilla."""
    rng = np.random.default_rng(7)
    M = rng.standard_normal((60, 60))
    M = (M + M.T) / 2
    energy, vector = lowest_eigenpair(M)
    assert energy == pytest.approx(np.linalg.eigvalsh(M)[0], abs=1e-9)
    assert np.linalg.norm(M @ vector - energy * vector) < 1e-8


def test_lanczos_reproducible():
    """Test de vector inicial con semilla fija: resultados idénticos."""
    H = assemble_hamiltonian(DickeParams(lam=1.0, two_j=6, n_cut=20))
    first = lanczos_lowest(H)
    second = lanczos_lowest(H)
    assert first.energy == second.energy
    assert np.array_equal(first.vector, second.vector)


def test_lanczos_not_converged():
    """Test de EigensolverError y del respaldo denso."""
    H = assemble_hamiltonian(DickeParams(lam=0.7, two_j=4, n_cut=20))
    with pytest.raises(EigensolverError) as exc:
        lanczos_lowest(H, max_iter=2)
    assert exc.value.iterations == 2
    assert len(exc.value.residuals) == 2
    assert solve_lowest(H, max_iter=2).method == "dense"


# ===== TESTS DE ESTADO FUNDAMENTAL =====
def test_ground_state_uncoupled(vacuum_state):
    """Test de λ = 0: E₀ = −jω₀ y estado |0⟩|j, −j⟩."""
    assert vacuum_state.energy == pytest.approx(-2.0, abs=1e-10)
    assert vacuum_state.coeffs[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert vacuum_state.parity == 1


def test_ground_state_even_parity(superradiant_state):
    """Test de coeficientes exactamente nulos en el sector impar."""
    n, k = np.indices(superradiant_state.coeffs.shape)
    odd = (n + k) % 2 == 1
    assert np.all(superradiant_state.coeffs[odd] == 0.0)
    assert float(np.sum(superradiant_state.coeffs ** 2)) == pytest.approx(1.0, abs=1e-12)
    # Convención de signo: la mayor componente es positiva
    flat = superradiant_state.coeffs.ravel()
    assert flat[np.argmax(np.abs(flat))] > 0


def test_ground_state_read_only(superradiant_state):
    """Test de coeficientes inmutables."""
    with pytest.raises(ValueError):
        superradiant_state.coeffs[0, 0] = 0.0


def test_ground_state_even_block_energy(superradiant_state):
    """Test de E₀ contra el bloque par resuelto de forma densa."""
    params = superradiant_state.params
    H = assemble_hamiltonian(params).toarray()
    even = even_block_indices(params)
    exact = np.linalg.eigvalsh(H[np.ix_(even, even)])[0]
    assert superradiant_state.energy == pytest.approx(exact, abs=1e-9)


def test_variational_upper_bound():
    """Test de ℋ₊(α_e, z_e) ≥ E₀."""
    params = DickeParams(lam=1.0, two_j=10, n_cut=40)
    gs = ground_state(params)
    assert gs.energy <= ground_energy_variational(params) + 1e-9


def test_convergence_uncoupled():
    """Test de convergencia inmediata en λ = 0."""
    n_cut, gs = converge_cutoff(DickeParams(lam=0.0, two_j=4, n_cut=0))
    assert n_cut == 0
    assert gs.energy == pytest.approx(-2.0, abs=1e-10)


def test_convergence_study_monotone():
    """Test de energías no crecientes al aumentar el corte."""
    steps, gs = convergence_study(DickeParams(lam=1.5, two_j=10), energy_tol=1e-8, n_cut_max=150)
    energies = [step.energy for step in steps]
    assert all(b <= a + 1e-10 for a, b in zip(energies, energies[1:]))
    assert steps[-1].converged
    assert steps[-1].n_cut == gs.params.n_cut
    assert steps[-1].leakage < 1e-8


def test_convergence_failure():
    """Test de ConvergenceError con el historial parcial."""
    with pytest.raises(ConvergenceError) as exc:
        convergence_study(DickeParams(lam=1.5, two_j=10), n_cut_max=10)
    assert exc.value.n_cut_max == 10
    assert [step.n_cut for step in exc.value.steps] == [0]
    assert exc.value.exit_code == EXIT_NUMERIC


def test_wavefunction_vacuum(vacuum_state):
    """Test de ψ(0, 0) = 1/√π para el vacío."""
    assert numeric_wavefunction(vacuum_state, "position", 0.0, 0.0) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-8)


def test_wavefunction_normalized(superradiant_state):
    """Test de ∫|ψ|² = 1 en posición y en momento."""
    grid = np.arange(-9.0, 9.0 + 1e-9, 0.05)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    position = numeric_wavefunction(superradiant_state, "position", X, Y)
    momentum = numeric_wavefunction(superradiant_state, "momentum", X, Y)
    assert float(np.sum(np.abs(position) ** 2)) * 0.05 ** 2 == pytest.approx(1.0, abs=1e-6)
    assert float(np.sum(np.abs(momentum) ** 2)) * 0.05 ** 2 == pytest.approx(1.0, abs=1e-6)


def test_wavefunction_unknown_space(vacuum_state):
    with pytest.raises(ValueError):
        numeric_wavefunction(vacuum_state, "energy", 0.0, 0.0)


# ===== TESTS DE ESQUEMAS =====
def test_params_alias_and_validation():
    """Test de DickeParams: alias 'lambda' y rangos."""
    params = DickeParams(**{"lambda": 0.3, "two_j": 2})
    assert params.lam == 0.3
    assert params.j == 1.0
    assert params.dimension == 41 * 3
    with pytest.raises(ValidationError):
        DickeParams(omega=0.0, two_j=2)
    with pytest.raises(ValidationError):
        DickeParams(two_j=0)
    with pytest.raises(ValidationError):
        params.with_coupling(-0.1)
    assert params.with_cutoff(5).n_cut == 5


def test_params_frozen():
    params = DickeParams(two_j=2)
    with pytest.raises(ValidationError):
        params.lam = 1.0


def test_ground_state_validation():
    """Test de GroundState: norma y paridad."""
    params = DickeParams(two_j=2, n_cut=1)
    with pytest.raises(ValidationError):
        GroundState(params=params, coeffs=np.full((2, 3), 0.5), energy=0.0)
    odd = np.zeros((2, 3))
    odd[0, 1] = 1.0
    with pytest.raises(ValidationError):
        GroundState(params=params, coeffs=odd, energy=0.0)
    with pytest.raises(ValidationError):
        GroundState(params=params, coeffs=np.eye(3)[:1], energy=0.0)


def test_quadrature_spec():
    """Test de QuadratureSpec: mínimo de nodos y duplicación."""
    with pytest.raises(ValidationError):
        QuadratureSpec(nodes_per_axis=4)
    assert QuadratureSpec().doubled().nodes_per_axis == 96


def test_sweep_config_validation():
    """Test de validadores de SweepConfig."""
    with pytest.raises(ValidationError):
        SweepConfig(lambda_grid=[])
    with pytest.raises(ValidationError):
        SweepConfig(lambda_grid=[0.2, 0.1])
    with pytest.raises(ValidationError):
        SweepConfig(lambda_grid=[-0.1, 0.1])
    with pytest.raises(ValidationError):
        SweepConfig(channels=["exact"])
    with pytest.raises(ValidationError):
        SweepConfig(nu_list=[1.0])
    with pytest.raises(ValidationError):
        SweepConfig(nu_list=[0.0, 2.0])
    cfg = SweepConfig(channels=["variational", "numeric", "numeric"], nu_list=[3.0, 0.5, 3.0])
    assert cfg.channels == ["numeric", "variational"]
    assert cfg.nu_list == [0.5, 3.0]
    assert cfg.params_for(0.4, 12) == DickeParams(lam=0.4, two_j=20, n_cut=12)


def test_measure_report_validation():
    """Test de MeasureReport: momentos positivos."""
    data = dict(channel="numeric", lam=0.0, two_j=2, n_cut=0, norm=1.0, P=0.25, W=2.0,
                P1=0.5, P2=0.5, W1=1.0, W2=1.0)
    report = MeasureReport(**data)
    assert report.row([])["lambda"] == 0.0
    with pytest.raises(ValidationError):
        MeasureReport(**{**data, "P": -0.1})
    with pytest.raises(KeyError):
        report.moment(3.0)


def test_equilibrium_config_validation():
    with pytest.raises(ValidationError):
        EquilibriumConfig(alpha_e=-1.0, z_e=0.0, beta_e=0.0, phase="normal")
    with pytest.raises(ValidationError):
        EquilibriumConfig(alpha_e=1.0, z_e=0.5, beta_e=1.0, phase="superradiant")


# ===== TESTS DE UTILIDADES Y CONFIGURACIÓN =====
def test_frange_and_grids():
    """Test de rangos cerrados estables."""
    assert frange(0.0, 0.3, 0.1) == [0.0, 0.1, 0.2, 0.3]
    assert parse_lambda_grid("0:0.1:0.05") == [0.0, 0.05, 0.1]
    assert parse_lambda_grid("0.2, 0.4") == [0.2, 0.4]
    assert parse_lambda_grid("") == []
    grid = default_lambda_grid()
    assert grid[0] == 0.0 and grid[-1] == 1.0
    assert 0.405 in grid
    assert all(b > a for a, b in zip(grid, grid[1:]))
    with pytest.raises(ValueError):
        parse_lambda_grid("0:1")


def test_parse_cell():
    assert parse_cell("-1,1,-2,2") == (-1.0, 1.0, -2.0, 2.0)
    with pytest.raises(ValueError):
        parse_cell("1,1,0,1")
    with pytest.raises(ValueError):
        parse_cell("0,1")


def test_format_and_columns():
    """Test de claves decimales y nombres de columnas."""
    assert format_decimal(0.1) == "0.1"
    assert format_decimal(1e-05) == "1e-05"
    assert moment_column(2.0) == "M_2"
    assert moment_column(0.5) == "M_0.5"


def test_near_critical():
    assert near_critical(0.5, 0.5)
    assert near_critical(0.52, 0.5)
    assert not near_critical(0.6, 0.5)


def test_config_overrides(monkeypatch, tmp_path):
    """Test de precedencia flag > entorno > defecto."""
    monkeypatch.setenv("DICKE_CACHE_DIR", str(tmp_path / "env"))
    assert get_cache_dir() == tmp_path / "env"
    assert get_cache_dir(str(tmp_path / "flag")) == tmp_path / "flag"
    monkeypatch.delenv("DATABASE_URL", raising=False)
    assert get_database_url() is None
    assert get_database_url("sqlite:///runs.db") == "sqlite:///runs.db"


# ===== TESTS DE ERRORES Y LOGGING =====
def test_exit_codes():
    """Test de códigos de salida de las excepciones."""
    assert ConfigError("x").exit_code == 2
    assert ResonanceError(1.0, 2.0).exit_code == 2
    assert NormalizationError(0.9, 1e-6).exit_code == 3
    assert issubclass(DomainError, ValueError)


def test_handle_errors_mapping():
    """Test de la traducción de excepciones a códigos."""
    @handle_errors
    def fail(exc):
        raise exc

    assert fail(ConfigError("mala config")) == 2
    assert fail(NormalizationError(0.5, 1e-6)) == 3
    assert fail(ValueError("valor")) == 2
    assert fail(RuntimeError("inesperado")) == 3
    assert handle_errors(lambda: 0)() == 0


def test_task_logging(caplog):
    """Test de los mensajes de entrada y salida de una tarea."""
    with caplog.at_level(logging.INFO, logger="app.middleware"):
        with task_logging("sweep"):
            pass
        with pytest.raises(RuntimeError):
            with task_logging("grid"):
                raise RuntimeError("boom")
    messages = [record.getMessage() for record in caplog.records]
    assert any(m.startswith("→ sweep") for m in messages)
    assert any(m.startswith("← sweep [ok]") for m in messages)
    assert any("✗ grid ERROR: boom" in m for m in messages)


# ===== TESTS DE PERSISTENCIA =====
def test_create_and_finish_run(db):
    """Test de creación y cierre de una corrida."""
    run = crud.create_run(db, "sweep", '{"two_j": 4}')
    assert run.id is not None
    assert run.status == "running"
    assert run.created_at is not None
    finished = crud.finish_run(db, run, "ok")
    assert finished.status == "ok"
    assert finished.finished_at is not None
    assert crud.get_run(db, run.id).command == "sweep"


def test_add_and_get_rows(db):
    """Test de filas λ-canal, incluidas las fallidas."""
    run = crud.create_run(db, "sweep", "{}")
    crud.add_rows(db, run, [
        sample_row(0.2, "variational"),
        sample_row(0.1),
        sample_row(0.2, error="Norma fuera de tolerancia"),
    ])
    rows = crud.get_rows(db, run.id)
    assert [(r.lam, r.channel) for r in rows] == [(0.1, "numeric"), (0.2, "numeric"), (0.2, "variational")]
    assert crud.count_failed_rows(db, run.id) == 1
    failed = crud.get_rows(db, run.id, channel="numeric")[1]
    assert failed.P is None and failed.n_cut is None
    assert "error" not in failed.payload
    assert rows[0].P == 0.25


def test_list_and_delete_runs(db):
    """Test de listado y borrado en cascada."""
    first = crud.create_run(db, "sweep", "{}")
    crud.create_run(db, "compare", "{}")
    crud.add_rows(db, first, [sample_row(0.0)])
    assert [r.command for r in crud.list_runs(db)] == ["sweep", "compare"]
    crud.delete_run(db, first)
    assert crud.get_run(db, first.id) is None
    assert crud.get_rows(db, first.id) == []
    assert len(crud.list_runs(db)) == 1
