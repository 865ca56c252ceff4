import math

import numpy as np
import pytest

from app.coherent import husimi_exact
from app.exceptions import DomainError
from app.ground_state import ground_state
from app.hamiltonian import assemble_hamiltonian
from app.schemas import DickeParams, PhasePoint, PhasePointExact
from app.variational import (
    analytic_ipr,
    analytic_marginal_husimi,
    analytic_marginal_ipr,
    ansatz_husimi_exact,
    ansatz_husimi_hp,
    ansatz_log_husimi,
    ansatz_measures,
    ansatz_wavefunction,
    cat_state_vector,
    energy_gradient,
    energy_surface,
    energy_surface_pm,
    equilibrium,
    equilibrium_gradient_check,
    lieb_bound,
    make_ansatz,
    refine_equilibrium,
    thermo_limits,
    variational_energy,
)
from app.zeros import clip_line, husimi_zero_lines

UNIT_CELL = (-1.0, 1.0, -1.0, 1.0)


# ===== TESTS DE EQUILIBRIO =====
def test_equilibrium_normal_phase():
    """Test de equilibrio en el origen para λ < λ_c."""
    eq = equilibrium(DickeParams(lam=0.3, two_j=20))
    assert eq.phase == "normal"
    assert (eq.alpha_e, eq.z_e, eq.beta_e) == (0.0, 0.0, 0.0)
    assert eq.displacement == 0.0


def test_equilibrium_superradiant_values():
    """Test de α_e, z_e y β_e para j = 10, λ = 1."""
    eq = equilibrium(DickeParams(lam=1.0, two_j=20))
    assert eq.phase == "superradiant"
    assert eq.alpha_e == pytest.approx(-4.330127, abs=1e-6)
    assert eq.z_e == pytest.approx(0.7745967, abs=1e-7)
    assert eq.beta_e == pytest.approx(3.4641016, abs=1e-7)


def test_equilibrium_continuous_and_monotone():
    """Test de continuidad en λ_c y crecimiento de |α_e| y z_e."""
    at_critical = equilibrium(DickeParams(lam=0.5, two_j=20))
    assert at_critical.alpha_e == pytest.approx(0.0, abs=1e-12)
    assert at_critical.z_e == pytest.approx(0.0, abs=1e-12)
    branch = [equilibrium(DickeParams(lam=lam, two_j=20)) for lam in (0.55, 0.7, 1.0, 2.0)]
    assert all(b.alpha_e < a.alpha_e for a, b in zip(branch, branch[1:]))
    assert all(b.z_e > a.z_e for a, b in zip(branch, branch[1:]))


def test_equilibrium_off_resonance():
    """Test de λ_c = sqrt(ωω₀)/2 fuera de resonancia."""
    assert equilibrium(DickeParams(omega=4.0, omega0=1.0, lam=0.9, two_j=10)).phase == "normal"
    assert equilibrium(DickeParams(omega=4.0, omega0=1.0, lam=1.1, two_j=10)).phase == "superradiant"


@pytest.mark.parametrize("two_j", [10, 20])
@pytest.mark.parametrize("lam", [0.6, 1.0, 2.0])
def test_equilibrium_is_stationary(two_j, lam):
    """Test de ∇ℋ = 0 en el equilibrio cerrado."""
    params = DickeParams(lam=lam, two_j=two_j)
    assert equilibrium_gradient_check(params) < 1e-6
    eq = equilibrium(params)
    assert energy_gradient(params, complex(eq.alpha_e + 0.1), complex(eq.z_e)) > 1e-3


def test_energy_at_equilibrium():
    """Test de ℋ(α_e, z_e) contra −(jω₀/2)(μ² + μ⁻²)."""
    params = DickeParams(lam=1.0, two_j=20)
    eq = equilibrium(params)
    assert energy_surface(complex(eq.alpha_e), complex(eq.z_e), params) == pytest.approx(-21.25, abs=1e-9)
    assert variational_energy(params) == pytest.approx(-21.25, abs=1e-12)
    assert variational_energy(DickeParams(lam=0.2, two_j=20)) == -10.0


def test_energy_gradient_rejects_step():
    with pytest.raises(ValueError):
        energy_gradient(DickeParams(two_j=2), 0j, 0j, h=0.0)


# ===== TESTS DE SUPERFICIES ℋ± =====
def test_energy_surface_pm_origin():
    """Test de ℋ₊(0, 0) = −jω₀ y rama impar indefinida en el origen."""
    params = DickeParams(lam=0.3, two_j=6)
    assert energy_surface_pm(0j, 0j, params, "+") == pytest.approx(-3.0, abs=1e-12)
    with pytest.raises(DomainError):
        energy_surface_pm(0j, 0j, params, "-")


@pytest.mark.parametrize("branch", ["+", "-"])
@pytest.mark.parametrize("alpha,z", [(-1.2 + 0j, 0.4 + 0j), (-1.0 + 0.3j, 0.4 - 0.2j), (0.7 - 0.5j, -0.3 + 0.6j)])
def test_energy_surface_pm_matches_cat_state(branch, alpha, z):
    """Test de ℋ± contra ⟨ψ±|H|ψ±⟩ con el gato en la base truncada."""
    params = DickeParams(lam=0.8, two_j=6, n_cut=40)
    vector = cat_state_vector(alpha, z, params, branch).ravel()
    H = assemble_hamiltonian(params)
    expectation = float(np.vdot(vector, H @ vector).real)
    assert energy_surface_pm(alpha, z, params, branch) == pytest.approx(expectation, abs=1e-8)


def test_cat_state_parity():
    """Test de paridad definida del gato."""
    params = DickeParams(lam=0.8, two_j=4, n_cut=20)
    even = cat_state_vector(-1.0, 0.5, params, "+")
    odd = cat_state_vector(-1.0, 0.5, params, "-")
    n, k = np.indices(even.shape)
    assert np.all(even[(n + k) % 2 == 1] == 0)
    assert np.all(odd[(n + k) % 2 == 0] == 0)
    assert np.linalg.norm(even) == pytest.approx(1.0)


def test_variational_bounds_ground_energy():
    """Test de E₀ ≤ ℋ₊(α_e, z_e): el gato es una cota superior."""
    params = DickeParams(lam=0.7, two_j=8, n_cut=40)
    eq = equilibrium(params)
    plus = energy_surface_pm(complex(eq.alpha_e), complex(eq.z_e), params, "+")
    assert ground_state(params).energy <= plus + 1e-9


def test_refine_equilibrium():
    """Test del refinamiento numérico: no empeora la energía cerrada."""
    refined = refine_equilibrium(DickeParams(lam=1.0, two_j=20))
    assert refined.energy <= refined.closed_form_energy + 1e-10
    assert refined.alpha <= 0
    assert refined.alpha == pytest.approx(-4.330127, abs=1e-2)
    odd = refine_equilibrium(DickeParams(lam=0.3, two_j=6), "-")
    assert math.isnan(odd.closed_form_energy)
    assert math.isfinite(odd.energy)


# ===== TESTS DE DISTRIBUCIONES DEL GATO =====
def test_make_ansatz_odd_normal_phase():
    """Test de DomainError para la rama impar en la fase normal."""
    with pytest.raises(DomainError):
        make_ansatz(DickeParams(lam=0.2, two_j=10), "-")
    assert make_ansatz(DickeParams(lam=1.0, two_j=10), "-").sign == -1


def test_ansatz_normal_phase_is_vacuum():
    """Test de Φ₊ = e^{-|α|²-|β|²} y Ψ₊ = e^{-|α|²}(1+|z|²)^{-2j} en la fase normal."""
    st = make_ansatz(DickeParams(lam=0.2, two_j=10))
    p = PhasePoint(0.3, -0.4, 0.5, 0.2)
    assert ansatz_husimi_hp(st, p) == pytest.approx(math.exp(-0.25 - 0.29), abs=1e-14)
    exact = ansatz_husimi_exact(st, PhasePointExact(0.3 - 0.4j, 0.1 + 0.2j))
    assert exact == pytest.approx(math.exp(-0.25) * 1.05 ** -10, abs=1e-14)


def test_ansatz_parity_and_bounds():
    """Test de 0 ≤ Φ± ≤ 1 y simetría Φ(−α, −β) = Φ(α, β)."""
    for branch in ("+", "-"):
        st = make_ansatz(DickeParams(lam=0.9, two_j=6), branch)
        rng = np.random.default_rng(11)
        a1, a2, b1, b2 = rng.normal(scale=2.0, size=(4, 300))
        values = np.exp(ansatz_log_husimi(st, a1, a2, b1, b2))
        assert np.all(values >= 0) and np.all(values <= 1 + 1e-12)
        mirrored = np.exp(ansatz_log_husimi(st, -a1, -a2, -b1, -b2))
        assert np.allclose(values, mirrored, atol=1e-14)


def test_contracted_ansatz_close_to_exact():
    """Test de Φ₊ (contraída) cerca de Ψ₊ (exacta) para |z| < 0.3."""
    params = DickeParams(lam=0.4, two_j=20)
    st = make_ansatz(params)
    root = math.sqrt(params.two_j)
    for alpha, z in [(0.2 + 0.1j, 0.1 + 0.05j), (-0.5j, 0.2 - 0.1j), (0.8 + 0j, -0.25 + 0j)]:
        exact = ansatz_husimi_exact(st, PhasePointExact(alpha, z))
        beta = root * z
        contracted = ansatz_husimi_hp(st, PhasePoint(alpha.real, alpha.imag, beta.real, beta.imag))
        assert abs(exact - contracted) < 0.05


def test_ansatz_close_to_numeric_exact():
    """Test de Ψ₊ del gato cerca de Ψ del estado diagonalizado (j = 10, λ = 0.3)."""
    params = DickeParams(lam=0.3, two_j=20, n_cut=20)
    gs = ground_state(params)
    st = make_ansatz(params)
    points = [PhasePointExact(complex(a, b), complex(c, d))
              for a in (-0.8, 0.0, 0.5) for b in (-0.3, 0.4) for c in (-0.2, 0.0, 0.15) for d in (0.0, 0.1)]
    assert max(abs(ansatz_husimi_exact(st, p) - husimi_exact(gs, p)) for p in points) < 0.1


# ===== TESTS DE FORMAS CERRADAS =====
def test_analytic_ipr_limits():
    """Test de P = 1/4 en la fase normal y P → 1/8 en la superradiante."""
    assert analytic_ipr(DickeParams(lam=0.0, two_j=10)) == 0.25
    assert analytic_ipr(DickeParams(lam=2.0, two_j=100)) == pytest.approx(0.125, abs=1e-12)
    p1, p2 = analytic_marginal_ipr(DickeParams(lam=0.0, two_j=10))
    assert (p1, p2) == pytest.approx((0.5, 0.5))
    p1, p2 = analytic_marginal_ipr(DickeParams(lam=2.0, two_j=100))
    assert (p1, p2) == pytest.approx((0.25, 0.5), abs=1e-12)


def test_ipr_sharpens_with_spin():
    """Test de la caída de P más abrupta al crecer j."""
    values = [analytic_ipr(DickeParams(lam=0.6, two_j=two_j)) for two_j in (4, 10, 20)]
    assert values[0] == pytest.approx(0.149, abs=1e-3)
    assert values[1] == pytest.approx(0.1253, abs=1e-3)
    assert values[0] > values[1] > values[2]


@pytest.mark.parametrize("two_j", [2, 4, 10, 20])
@pytest.mark.parametrize("lam", [0.2, 0.55, 0.8, 1.5])
def test_reduced_integrals_match_closed_forms(two_j, lam):
    """Test de las integrales reducidas contra P, P⁽¹⁾ y P⁽²⁾ cerrados."""
    params = DickeParams(lam=lam, two_j=two_j)
    report = ansatz_measures(make_ansatz(params))
    p1, p2 = analytic_marginal_ipr(params)
    assert report.norm == pytest.approx(1.0, abs=1e-10)
    assert report.P == pytest.approx(analytic_ipr(params), abs=1e-6)
    assert report.P1 == pytest.approx(p1, abs=1e-6)
    assert report.P2 == pytest.approx(p2, abs=1e-6)
    assert report.W >= lieb_bound(two_j)


def test_normal_phase_measures_exact():
    """Test de M_ν = ν⁻², W = 2 y W₁ = W₂ = 1 en la fase normal."""
    report = ansatz_measures(make_ansatz(DickeParams(lam=0.3, two_j=10)), [0.5, 2.0, 3.0])
    assert report.moment(3.0) == pytest.approx(1 / 9, abs=1e-10)
    assert report.moment(0.5) == pytest.approx(4.0, abs=1e-9)
    assert report.W == pytest.approx(2.0, abs=1e-10)
    assert (report.W1, report.W2) == pytest.approx((1.0, 1.0), abs=1e-10)


def test_ansatz_measures_order_one():
    """Test de ν = 1 como límite de Wehrl y continuidad de W_ν a su alrededor."""
    st = make_ansatz(DickeParams(lam=0.8, two_j=10))
    report = ansatz_measures(st, [0.999, 1.0, 1.001])
    entries = {e.nu: e for e in report.renyi}
    assert entries[1.0].moment == pytest.approx(1.0, abs=1e-8)
    assert entries[1.0].entropy == report.W
    for nu in (0.999, 1.001):
        assert entries[nu].entropy == pytest.approx(report.W, abs=1e-2)
    assert next(e for e in report.marginal2 if e.nu == 1.0).entropy == report.W2
    with pytest.raises(DomainError):
        ansatz_measures(st, [-1.0])


@pytest.mark.parametrize("lam,phase", [(0.2, "normal"), (2.0, "superradiant")])
def test_thermodynamic_limits(lam, phase):
    """Test de las medidas para j = 200 contra los límites j → ∞."""
    report = ansatz_measures(make_ansatz(DickeParams(lam=lam, two_j=400)), [2.0, 3.0, 4.0])
    for nu in (2.0, 3.0, 4.0):
        assert report.moment(nu) == pytest.approx(thermo_limits(nu, phase, "joint"), rel=0.01)
        m1 = next(e.moment for e in report.marginal1 if e.nu == nu)
        m2 = next(e.moment for e in report.marginal2 if e.nu == nu)
        assert m1 == pytest.approx(thermo_limits(nu, phase, "marginal1"), rel=0.01)
        assert m2 == pytest.approx(thermo_limits(nu, phase, "marginal2"), rel=0.01)
    assert report.W == pytest.approx(thermo_limits(None, phase, "wehrl"), rel=0.02)
    assert report.W1 == pytest.approx(thermo_limits(None, phase, "wehrl1"), rel=0.02)
    assert report.W2 == pytest.approx(thermo_limits(None, phase, "wehrl2"), rel=0.02)
    assert report.P == pytest.approx(report.P1 * report.P2, abs=1e-6)


def test_thermo_limits_values():
    assert thermo_limits(2.0, "superradiant", "joint") == 0.125
    assert thermo_limits(3.0, "normal", "marginal2") == pytest.approx(1 / 3)
    assert thermo_limits(None, "superradiant", "wehrl") == pytest.approx(2 + math.log(2))
    with pytest.raises(ValueError):
        thermo_limits(None, "normal", "joint")
    with pytest.raises(ValueError):
        thermo_limits(2.0, "normal", "entropy")


def test_marginal_closed_forms_normalized():
    """Test de ∫Φ_κ d²/π = 1 para las marginales cerradas."""
    st = make_ansatz(DickeParams(lam=0.7, two_j=10))
    grid = np.linspace(-9.0, 9.0, 91)
    for kappa in (1, 2):
        total = sum(analytic_marginal_husimi(st, kappa, (a, b)) for a in grid for b in grid)
        assert total * 0.2 ** 2 / math.pi == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        analytic_marginal_husimi(st, 3, (0.0, 0.0))


# ===== TESTS DE FUNCIONES DE ONDA =====
def test_ansatz_wavefunction_normalized():
    """Test de ∫|ψ|² = 1 en posición y en momento."""
    st = make_ansatz(DickeParams(lam=0.9, two_j=6))
    grid = np.arange(-10.0, 10.0 + 1e-9, 0.05)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    for space in ("position", "momentum"):
        values = ansatz_wavefunction(st, space, X, Y)
        assert float(np.sum(values ** 2)) * 0.05 ** 2 == pytest.approx(1.0, abs=1e-6)
    assert ansatz_wavefunction(st, "position", 0.3, -0.2) == pytest.approx(
        ansatz_wavefunction(st, "position", -0.3, 0.2), abs=1e-15
    )


def test_ansatz_wavefunction_nodes_parallel_to_zero_lines():
    """Test de nodos de ψ̃ paralelos a las franjas, con la mitad de su paso de fase."""
    params = DickeParams(lam=1.0, two_j=6)
    st = make_ansatz(params)
    eq = st.eq
    # Nodo: α_e α₂ + β_e β₂ = π/4 con α₂ = k_x/√2, β₂ = k_y/√2
    for beta2 in (-0.5, 0.0, 0.7):
        alpha2 = (math.pi / 4 - eq.beta_e * beta2) / eq.alpha_e
        value = ansatz_wavefunction(st, "momentum", math.sqrt(2) * alpha2, math.sqrt(2) * beta2)
        assert value == pytest.approx(0.0, abs=1e-12)
    line = husimi_zero_lines(params, UNIT_CELL, "momentum")[0]
    assert line.slope == pytest.approx(-eq.beta_e / eq.alpha_e)


def test_ansatz_wavefunction_odd_branch():
    with pytest.raises(DomainError):
        ansatz_wavefunction(make_ansatz(DickeParams(lam=1.0, two_j=6), "-"), "position", 0.0, 0.0)


# ===== TESTS DE FRANJAS DE CEROS =====
@pytest.mark.parametrize("lam,two_j,count", [(0.6, 20, 2), (0.6, 200, 8), (10.0, 20, 32)])
def test_zero_line_counts(lam, two_j, count):
    """Test del número de franjas en la celda [−1, 1]²."""
    lines = husimi_zero_lines(DickeParams(lam=lam, two_j=two_j), UNIT_CELL, "momentum")
    assert len(lines) == count
    indices = [line.fringe_index for line in lines]
    assert indices == sorted(indices)


def test_zero_lines_more_fringes_for_larger_spin():
    few = husimi_zero_lines(DickeParams(lam=10.0, two_j=20), UNIT_CELL)
    many = husimi_zero_lines(DickeParams(lam=10.0, two_j=200), UNIT_CELL)
    assert len(many) > len(few)


def test_zero_lines_normal_phase():
    """Test de ausencia de ceros en la fase normal."""
    params = DickeParams(lam=0.3, two_j=20)
    assert husimi_zero_lines(params, UNIT_CELL, "momentum") == []
    assert husimi_zero_lines(params, UNIT_CELL, "position") == []


@pytest.mark.parametrize("lam,two_j", [(0.6, 20), (10.0, 20)])
def test_zero_lines_are_zeros(lam, two_j):
    """Test de Φ₊ = 0 sobre los segmentos predichos."""
    params = DickeParams(lam=lam, two_j=two_j)
    st = make_ansatz(params)
    position = husimi_zero_lines(params, UNIT_CELL, "position")
    assert len(position) == 1
    for line in husimi_zero_lines(params, UNIT_CELL, "momentum"):
        a_lo, b_lo, a_hi, b_hi = line.segment
        for t in (0.0, 0.37, 1.0):
            alpha2 = a_lo + t * (a_hi - a_lo)
            beta2 = b_lo + t * (b_hi - b_lo)
            assert alpha2 == pytest.approx(line.slope * beta2 + line.intercept)
            assert ansatz_husimi_hp(st, PhasePoint(0.0, alpha2, 0.0, beta2)) < 1e-12


def test_position_zero_line_through_origin():
    params = DickeParams(lam=0.6, two_j=20)
    line = husimi_zero_lines(params, UNIT_CELL, "position")[0]
    eq = equilibrium(params)
    assert line.intercept == 0.0
    assert line.slope == pytest.approx(-eq.beta_e / eq.alpha_e)
    assert line.fringe_index is None


def test_clip_line():
    """Test del recorte de rectas a la celda cerrada."""
    assert clip_line(1.0, 0.0, UNIT_CELL) == [-1.0, -1.0, 1.0, 1.0]
    assert clip_line(0.0, 0.5, UNIT_CELL) == [0.5, -1.0, 0.5, 1.0]
    assert clip_line(0.0, 2.0, UNIT_CELL) is None
    # Tocar sólo una esquina no es un segmento
    assert clip_line(1.0, 2.0, UNIT_CELL) is None
