import logging
import math

import numpy as np
import pytest

from app.exceptions import HermiteDegreeError, ResonanceError
from app.ground_state import ground_state
from app.measures import marginal_husimi, measure_report
from app.schemas import DickeParams, PhasePoint
from app.smearing import (
    coord_map,
    hermite_integral,
    hermite_integral_table,
    inverse_coord_map,
    marginal_fast_path,
    smeared_marginal_husimi,
    smeared_measures,
    smeared_momentum_density,
    smeared_momentum_grid,
    smeared_position_density,
    smeared_position_grid,
    smeared_to_marginal,
    smearing_config,
)

MARGINAL_POINTS = [(0.0, 0.0), (-1.0, 0.6), (0.7, -0.4), (1.5, 1.1)]


@pytest.fixture
def cfg():
    return smearing_config(DickeParams(lam=0.5, two_j=2))


# ===== TESTS DE CONFIGURACIÓN =====
def test_smearing_config_resonant():
    """Test de σ² = 1/(2ω) en resonancia."""
    cfg = smearing_config(DickeParams(omega=2.0, omega0=2.0, two_j=2))
    assert cfg.sigma2 == 0.25
    assert cfg.sigma == 0.5


def test_smearing_config_off_resonance():
    """Test de ResonanceError con ω ≠ ω₀."""
    with pytest.raises(ResonanceError) as exc:
        smearing_config(DickeParams(omega=1.0, omega0=1.5, two_j=2))
    assert exc.value.exit_code == 2
    assert exc.value.omega0 == 1.5


def test_coord_map_round_trip(cfg):
    point = PhasePoint(0.4, -1.2, 0.9, 0.3)
    x, y, k_x, k_y = coord_map(point, cfg)
    # σ = 1/√2: x = √2 α₁, k_x = √2 α₂
    assert (x, k_x) == pytest.approx((math.sqrt(2) * 0.4, -math.sqrt(2) * 1.2))
    assert tuple(inverse_coord_map(x, y, k_x, k_y, cfg)) == pytest.approx(tuple(point))


# ===== TESTS DE INTEGRALES DE HERMITE =====
def test_hermite_integral_ground(cfg):
    """Test de I₀₀(x) = e^{-x²/2}/√(2π) para ω = 1."""
    for x in (0.0, 0.5, -1.3, 2.7):
        expected = math.exp(-x ** 2 / 2) / math.sqrt(2 * math.pi)
        assert hermite_integral(0, 0, x, cfg) == pytest.approx(expected, abs=1e-15)


def test_hermite_integral_symmetric(cfg):
    x = np.linspace(-3.0, 3.0, 13)
    assert np.allclose(hermite_integral(2, 5, x, cfg), hermite_integral(5, 2, x, cfg), atol=1e-15)
    assert np.allclose(hermite_integral(3, 4, x, cfg), -hermite_integral(3, 4, -x, cfg), atol=1e-15)


def test_hermite_integral_orthonormal(cfg):
    """Test de ∫ I_{n,n'} dx = δ_{nn'} (la gaussiana conserva el área)."""
    x = np.linspace(-20.0, 20.0, 4001)
    h = x[1] - x[0]
    for n in range(6):
        for n_prime in range(6):
            area = float(np.sum(hermite_integral(n, n_prime, x, cfg))) * h
            assert area == pytest.approx(1.0 if n == n_prime else 0.0, abs=1e-10)


def test_hermite_integral_log_space_matches_direct(cfg):
    """Test de la suma en espacio logarítmico contra la evaluación directa."""
    x = np.linspace(-4.0, 4.0, 33)
    for n in (0, 3, 9, 15):
        for n_prime in (0, 4, 15):
            direct = hermite_integral(n, n_prime, x, cfg)
            logged = hermite_integral(n, n_prime, x, cfg, log_space=True)
            assert np.allclose(logged, direct, rtol=1e-9, atol=1e-13)


def test_hermite_integral_table_matches(cfg):
    x = np.linspace(-2.0, 2.0, 9)
    table = hermite_integral_table(6, x, cfg.omega)
    assert table.shape == (7, 7, 9)
    assert np.allclose(table[2, 6], hermite_integral(2, 6, x, cfg), atol=1e-14)


def test_hermite_integral_degree_limit(cfg):
    """Test de HermiteDegreeError por encima del grado directo estable."""
    with pytest.raises(HermiteDegreeError) as exc:
        hermite_integral(80, 80, np.array([0.0, 1.0]), cfg)
    assert exc.value.degree == 160
    value = hermite_integral(80, 80, np.array([0.0, 1.0]), cfg, log_space=True)
    assert np.all(np.isfinite(value))
    with pytest.raises(ValueError):
        hermite_integral(-1, 0, 0.0, cfg)


# ===== TESTS DE DENSIDADES SUAVIZADAS =====
def test_uncoupled_densities(vacuum_state):
    """Test de ξ = e^{-r²/2}/2π y ξ̃ = 2π e^{-k²/2} en λ = 0."""
    cfg = smearing_config(vacuum_state.params)
    for x, y in [(0.0, 0.0), (0.8, -0.3), (-1.5, 2.0)]:
        r2 = x ** 2 + y ** 2
        assert smeared_position_density(vacuum_state, x, y, cfg) == pytest.approx(
            math.exp(-r2 / 2) / (2 * math.pi), abs=1e-12
        )
        assert smeared_momentum_density(vacuum_state, x, y, cfg) == pytest.approx(
            2 * math.pi * math.exp(-r2 / 2), abs=1e-10
        )


def test_density_parity_and_positivity(resonant_state):
    """Test de ξ(−r) = ξ(r) y ξ ≥ 0 para un estado de paridad par."""
    cfg = smearing_config(resonant_state.params)
    rng = np.random.default_rng(5)
    x, y = rng.normal(scale=1.5, size=(2, 50))
    xi = smeared_position_density(resonant_state, x, y, cfg)
    assert np.all(xi >= 0)
    assert np.allclose(xi, smeared_position_density(resonant_state, -x, -y, cfg), atol=1e-14)
    xi_tilde = smeared_momentum_density(resonant_state, x, y, cfg)
    assert np.allclose(xi_tilde, smeared_momentum_density(resonant_state, -x, -y, cfg), atol=1e-12)


def test_density_grid_matches_points(resonant_state):
    cfg = smearing_config(resonant_state.params)
    x = np.array([-1.0, 0.0, 0.5])
    y = np.array([0.3, 1.2])
    grid = smeared_position_grid(resonant_state, x, y, cfg)
    momentum = smeared_momentum_grid(resonant_state, x, y, cfg)
    assert grid.shape == (3, 2)
    for i, a in enumerate(x):
        for j, b in enumerate(y):
            assert grid[i, j] == pytest.approx(smeared_position_density(resonant_state, a, b, cfg), abs=1e-14)
            assert momentum[i, j] == pytest.approx(smeared_momentum_density(resonant_state, a, b, cfg), abs=1e-12)


@pytest.mark.parametrize("kappa", [1, 2])
def test_smeared_marginal_matches_quadrature(resonant_state, quad, kappa):
    """Test de Φ_κ por suma cerrada contra la integración directa de Φ."""
    cfg = smearing_config(resonant_state.params)
    for point in MARGINAL_POINTS:
        closed = smeared_marginal_husimi(resonant_state, kappa, point, cfg)
        assert closed == pytest.approx(marginal_husimi(resonant_state, kappa, point, quad), abs=1e-6)


def test_smeared_marginal_invalid_kappa(resonant_state):
    with pytest.raises(ValueError):
        smeared_marginal_husimi(resonant_state, 0, (0.0, 0.0), smearing_config(resonant_state.params))


def test_fast_path_resonant(resonant_state, quad):
    cfg = smearing_config(resonant_state.params)
    point = (-1.0, 0.6)
    assert marginal_fast_path(resonant_state, 1, point, quad) == smeared_marginal_husimi(resonant_state, 1, point, cfg)


def test_fast_path_off_resonance(quad, caplog):
    """Test de caída a la cuadratura directa fuera de resonancia."""
    gs = ground_state(DickeParams(omega=1.0, omega0=2.0, lam=0.3, two_j=2, n_cut=8))
    with caplog.at_level(logging.WARNING, logger="app.smearing"):
        value = marginal_fast_path(gs, 2, (0.4, -0.2), quad)
    assert value == marginal_husimi(gs, 2, (0.4, -0.2), quad)
    assert any("cuadratura directa" in record.message for record in caplog.records)


# ===== TESTS DE MEDIDAS SUAVIZADAS =====
def test_uncoupled_smeared_measures(vacuum_state, quad):
    """Test de P^ξ = 1/4π y W^ξ = 1 + ln 2π en λ = 0."""
    cfg = smearing_config(vacuum_state.params)
    p_xi, p_xi_tilde, w_xi, w_xi_tilde = smeared_measures(vacuum_state, cfg, quad)
    assert p_xi == pytest.approx(1 / (4 * math.pi), abs=1e-9)
    assert p_xi_tilde == pytest.approx(math.pi, abs=1e-8)
    assert w_xi == pytest.approx(1 + math.log(2 * math.pi), abs=1e-8)
    assert w_xi_tilde == pytest.approx(1 - math.log(2 * math.pi), abs=1e-8)
    p1, p2, w1, w2 = smeared_to_marginal((p_xi, p_xi_tilde, w_xi, w_xi_tilde), cfg.omega)
    assert (p1, p2, w1, w2) == pytest.approx((0.5, 0.5, 1.0, 1.0), abs=1e-8)


@pytest.mark.parametrize("two_j,lam", [
    (2, 0.0), (2, 0.3), (2, 0.8),
    (4, 0.0), (4, 0.3), (4, 0.8),
    pytest.param(10, 0.0, marks=pytest.mark.slow),
    pytest.param(10, 0.3, marks=pytest.mark.slow),
    pytest.param(10, 0.8, marks=pytest.mark.slow),
])
def test_smeared_measures_match_marginals(converged_state, quad, two_j, lam):
    """Test de las relaciones de conversión contra las marginales de Husimi."""
    gs = converged_state(lam, two_j)
    cfg = smearing_config(gs.params)
    p1, p2, w1, w2 = smeared_to_marginal(smeared_measures(gs, cfg, quad), cfg.omega)
    report = measure_report(gs, quad)
    assert p1 == pytest.approx(report.P1, abs=1e-6)
    assert p2 == pytest.approx(report.P2, abs=1e-6)
    assert w1 == pytest.approx(report.W1, abs=1e-6)
    assert w2 == pytest.approx(report.W2, abs=1e-6)


def test_smeared_to_marginal_constants():
    p1, p2, w1, w2 = smeared_to_marginal((1.0, 1.0, 0.0, 0.0), 2.0)
    assert (p1, p2) == pytest.approx((math.pi, 1 / math.pi))
    assert (w1, w2) == pytest.approx((-math.log(math.pi), math.log(math.pi)))
