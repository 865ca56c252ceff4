import math
from functools import lru_cache

import numpy as np
import pytest

from app.coherent import NumericHusimi
from app.exceptions import DomainError, NormalizationError, QuadratureCoverageError
from app.ground_state import ground_state
from app.measures import (
    factorization_gap,
    marginal_husimi,
    marginal_measures,
    measure_report,
    moment_nu,
    participation_ratio,
    renyi_wehrl,
    wehrl_entropy,
)
from app.quadrature import integrate_husimi
from app.schemas import DickeParams, MeasureReport, QuadratureSpec
from app.variational import (
    analytic_ipr,
    analytic_marginal_husimi,
    ansatz_measures,
    lieb_bound,
    make_ansatz,
)


# ===== TESTS DEL ESTADO DESACOPLADO =====
def test_uncoupled_moments(vacuum_state, quad):
    """Test de M_ν = ν⁻² y P = 1/4 en λ = 0."""
    assert participation_ratio(vacuum_state, quad) == pytest.approx(0.25, abs=1e-8)
    assert moment_nu(vacuum_state, 3.0, quad) == pytest.approx(1 / 9, abs=1e-8)
    assert moment_nu(vacuum_state, 0.5, quad) == pytest.approx(4.0, abs=1e-6)
    assert moment_nu(vacuum_state, 1.0, quad) == pytest.approx(1.0, abs=1e-10)


def test_uncoupled_entropies(vacuum_state, quad):
    """Test de W = 2 y W_2 = ln 4 en λ = 0."""
    assert wehrl_entropy(vacuum_state, quad) == pytest.approx(2.0, abs=1e-8)
    assert renyi_wehrl(vacuum_state, 2.0, quad) == pytest.approx(math.log(4), abs=1e-8)
    with pytest.raises(ValueError):
        renyi_wehrl(vacuum_state, 1.0, quad)
    with pytest.raises(ValueError):
        moment_nu(vacuum_state, 0.0, quad)


def test_uncoupled_marginals(vacuum_state, quad):
    """Test de P₁ = P₂ = 1/2 y W₁ = W₂ = 1 en λ = 0."""
    for kappa in (1, 2):
        p, w, entries = marginal_measures(vacuum_state, kappa, quad)
        assert p == pytest.approx(0.5, abs=1e-8)
        assert w == pytest.approx(1.0, abs=1e-8)
        third = next(e for e in entries if e.nu == 3.0)
        assert third.moment == pytest.approx(1 / 3, abs=1e-8)


def test_uncoupled_report_factorizes(vacuum_state, quad):
    """Test de P = P₁P₂ y W = W₁ + W₂ para un producto de gaussianas."""
    report = measure_report(vacuum_state, quad)
    assert report.channel == "numeric"
    assert report.n_cut == 10
    gap_p, gap_w = factorization_gap(report)
    assert gap_p == pytest.approx(0.0, abs=1e-8)
    assert gap_w == pytest.approx(0.0, abs=1e-8)
    assert report.moment(4.0) == pytest.approx(1 / 16, abs=1e-8)


def test_uncoupled_marginal_pointwise(vacuum_state, quad):
    """Test de Φ₁(a, b) = e^{-a²-b²} e intercambio de marginales en λ = 0."""
    for point in [(0.0, 0.0), (0.5, -0.3), (1.2, 0.8)]:
        expected = math.exp(-point[0] ** 2 - point[1] ** 2)
        assert marginal_husimi(vacuum_state, 1, point, quad) == pytest.approx(expected, abs=1e-8)
        assert marginal_husimi(vacuum_state, 2, point, quad) == pytest.approx(expected, abs=1e-8)
    with pytest.raises(ValueError):
        marginal_husimi(vacuum_state, 3, (0.0, 0.0), quad)


# ===== TESTS DE PROPIEDADES GENERALES =====
def test_report_bounds(superradiant_state, quad):
    """Test de P ≤ 1/4, W ≥ cota de Lieb y entropías de Rényi monótonas."""
    report = measure_report(superradiant_state, quad)
    assert report.norm == pytest.approx(1.0, abs=1e-8)
    assert 0 < report.P <= 0.25 + 1e-9
    assert report.W >= lieb_bound(superradiant_state.params.two_j) - 1e-6
    entropies = [entry.entropy for entry in report.renyi]
    assert all(b <= a + 1e-9 for a, b in zip(entropies, entropies[1:]))


def test_report_stable_under_refinement(superradiant_state, quad):
    """Test de P y W estables al duplicar los nodos."""
    coarse = measure_report(superradiant_state, quad)
    fine = measure_report(superradiant_state, quad.doubled())
    assert fine.P == pytest.approx(coarse.P, abs=1e-6)
    assert fine.W == pytest.approx(coarse.W, abs=1e-6)
    assert fine.P1 == pytest.approx(coarse.P1, abs=1e-6)


def test_trapezoid_matches_gauss_hermite():
    """Test de equivalencia entre esquemas para j = 1/2 y corte pequeño."""
    gs = ground_state(DickeParams(lam=0.3, two_j=1, n_cut=2))
    gauss = measure_report(gs, QuadratureSpec())
    trapezoid = measure_report(gs, QuadratureSpec(scheme="trapezoid", nodes_per_axis=40))
    assert trapezoid.P == pytest.approx(gauss.P, abs=1e-6)
    assert trapezoid.W == pytest.approx(gauss.W, abs=1e-6)


def test_marginal_measures_match_report(superradiant_state, quad):
    """Test de marginal_measures contra el reporte de una sola pasada."""
    report = measure_report(superradiant_state, quad)
    p1, w1, _ = marginal_measures(superradiant_state, 1, quad)
    p2, w2, _ = marginal_measures(superradiant_state, 2, quad)
    assert (p1, w1, p2, w2) == pytest.approx((report.P1, report.W1, report.P2, report.W2), abs=1e-12)


def test_marginal_grid_matches_pointwise(superradiant_state, quad):
    """Test de la marginal acumulada en la rejilla contra la cuadratura puntual."""
    integrals = integrate_husimi(NumericHusimi(superradiant_state), quad)
    ax1, _, ax3, _ = integrals.axes
    i, j = len(ax1.nodes) // 2, len(ax3.nodes) // 2 + 3
    point = (float(ax1.nodes[i]), float(ax3.nodes[j]))
    assert integrals.phi1[i, j] == pytest.approx(marginal_husimi(superradiant_state, 1, point, quad), abs=1e-10)


def test_normalization_gate():
    """Test de ninguna medida con la norma fuera de tolerancia."""
    gs = ground_state(DickeParams(lam=0.0, two_j=2, n_cut=2))
    with pytest.raises(NormalizationError):
        participation_ratio(gs, QuadratureSpec(scheme="trapezoid", nodes_per_axis=8))


def test_coverage_gate(superradiant_state):
    """Test de QuadratureCoverageError con una caja demasiado estrecha."""
    quad = QuadratureSpec(scheme="trapezoid", nodes_per_axis=40, box_halfwidth=1.0)
    with pytest.raises(QuadratureCoverageError):
        participation_ratio(superradiant_state, quad)


# ===== TESTS DEL CANAL VARIACIONAL POR CUADRATURA =====
@pytest.mark.slow
@pytest.mark.parametrize("two_j", [4, 10, 20])
@pytest.mark.parametrize("lam", [0.2, 0.55, 0.8, 1.0])
def test_ansatz_quadrature_matches_closed_form(two_j, lam, quad):
    """Test de la cuadratura 4-D del gato contra P en forma cerrada."""
    params = DickeParams(lam=lam, two_j=two_j)
    st = make_ansatz(params)
    assert participation_ratio(st, quad) == pytest.approx(analytic_ipr(params), abs=1e-6)


@pytest.mark.slow
def test_ansatz_quadrature_matches_reduced_integrals(quad):
    """Test de las medidas del gato: rejilla 4-D contra integrales reducidas."""
    st = make_ansatz(DickeParams(lam=0.8, two_j=4))
    grid = measure_report(st, quad)
    reduced = ansatz_measures(st)
    assert grid.channel == "variational" and grid.n_cut == 0
    for name in ("P", "P1", "P2", "W1", "W2"):
        assert getattr(grid, name) == pytest.approx(getattr(reduced, name), abs=1e-6)
    # Φ ln Φ no es analítica sobre las rectas de ceros
    assert grid.W == pytest.approx(reduced.W, abs=1e-5)


def test_marginal_of_ansatz_matches_closed_form(quad):
    """Test de la marginal integrada del gato contra su forma cerrada."""
    st = make_ansatz(DickeParams(lam=0.6, two_j=20))
    for kappa in (1, 2):
        for point in [(0.0, 0.0), (-1.9, 1.9), (0.4, -0.7)]:
            expected = analytic_marginal_husimi(st, kappa, point)
            assert marginal_husimi(st, kappa, point, quad) == pytest.approx(expected, abs=1e-8)


# ===== TESTS DE CONVERGENCIA DEL CANAL NUMÉRICO =====
@pytest.fixture(scope="module")
def large_spin_state():
    """2j = 20 en λ = 1 (fase superradiante profunda)."""
    return ground_state(DickeParams(lam=1.0, two_j=20, n_cut=80))


@lru_cache(maxsize=None)
def numeric_report(lam: float, n_cut: int, two_j: int = 20) -> MeasureReport:
    return measure_report(ground_state(DickeParams(lam=lam, two_j=two_j, n_cut=n_cut)), QuadratureSpec())


@pytest.mark.slow
@pytest.mark.parametrize("lam", [0.9, 1.0])
def test_numeric_deep_superradiant(lam):
    """Test de P ∈ [0.120, 0.135] y W a menos de 5% de 2 + ln 2 para j = 10."""
    report = numeric_report(lam, 80)
    assert 0.120 <= report.P <= 0.135
    assert report.W == pytest.approx(2 + math.log(2), rel=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("lam,n_cut,p2", [(0.8, 60, 0.461), (0.9, 80, 0.449), (1.0, 80, 0.441)])
def test_numeric_momentum_marginal_superradiant(lam, n_cut, p2):
    """Test de P₂ numérica para j = 10: por debajo de 1/2 y estable en ±2%."""
    report = numeric_report(lam, n_cut)
    assert report.P2 == pytest.approx(p2, rel=0.02)
    assert report.P2 < 0.5


@pytest.mark.slow
def test_numeric_marginals_across_transition():
    """Test de P₁: 1/2 → ~1/4 y P₂ ≈ 1/2 en la fase normal (j = 10)."""
    normal = numeric_report(0.2, 30)
    assert normal.P1 == pytest.approx(0.5, rel=0.05)
    assert normal.P2 == pytest.approx(0.5, rel=0.05)
    deep = numeric_report(1.0, 80)
    assert deep.P1 == pytest.approx(0.275, rel=0.02)


@pytest.mark.slow
def test_numeric_normal_plateau(quad):
    """Test de la meseta normal: P ≈ 1/4 y W ≈ 2 para λ ≤ 0.2."""
    for lam in (0.05, 0.2):
        report = measure_report(ground_state(DickeParams(lam=lam, two_j=20, n_cut=20)), quad)
        assert 0.24 <= report.P <= 0.26
        assert 1.95 <= report.W <= 2.05


@pytest.mark.slow
@pytest.mark.parametrize("lam,n_cut,rel_p,rel_w", [
    (0.2, 30, 0.02, 0.02),
    # 0.7 λ_c: la rama normal ya está apretada y el gato es el vacío
    (0.35, 30, 0.06, 0.03),
    (0.8, 60, 0.03, 0.02),
    (1.0, 80, 0.03, 0.02),
])
def test_numeric_matches_variational(lam, n_cut, rel_p, rel_w):
    """Test de acuerdo numérico-variacional en P y W para j = 10."""
    numeric = numeric_report(lam, n_cut)
    variational = ansatz_measures(make_ansatz(DickeParams(lam=lam, two_j=20)))
    assert numeric.P == pytest.approx(variational.P, rel=rel_p)
    assert numeric.W == pytest.approx(variational.W, rel=rel_w)


def ipr_drop_width(converged_state, two_j: int, quad: QuadratureSpec) -> float:
    """Ancho en λ de la caída de P de 0.22 a 0.15, con interpolación lineal."""
    lams = np.round(np.concatenate([np.arange(0.3, 1.0, 0.05), np.arange(1.0, 3.01, 0.1)]), 2)
    crossings = {}
    previous = None
    for lam in lams:
        p = participation_ratio(converged_state(float(lam), two_j), quad)
        for level in (0.22, 0.15):
            if level not in crossings and p <= level:
                assert previous is not None, f"P={p} ya está bajo {level} en λ={lam}"
                lam0, p0 = previous
                crossings[level] = lam0 + (p0 - level) * (lam - lam0) / (p0 - p)
        if 0.15 in crossings:
            return crossings[0.15] - crossings[0.22]
        previous = (lam, p)
    pytest.fail(f"P no baja de 0.15 para 2j={two_j}")


@pytest.mark.slow
def test_numeric_ipr_drop_sharpens_with_spin(converged_state, quad):
    """Test de la caída de P más abrupta al crecer j (2j = 4, 10, 20)."""
    widths = [ipr_drop_width(converged_state, two_j, quad) for two_j in (4, 10, 20)]
    assert widths[0] > widths[1] > widths[2] > 0


def test_report_order_one_is_wehrl_limit(vacuum_state, quad):
    """Test de ν = 1: el momento es la norma y la entropía es el límite de Wehrl."""
    report = measure_report(vacuum_state, quad, nus=[1.0, 2.0])
    entry = next(e for e in report.renyi if e.nu == 1.0)
    assert entry.moment == pytest.approx(1.0, abs=1e-10)
    assert entry.entropy == report.W
    assert next(e for e in report.marginal1 if e.nu == 1.0).entropy == report.W1
    assert next(e for e in report.marginal2 if e.nu == 1.0).entropy == report.W2
    with pytest.raises(DomainError):
        measure_report(vacuum_state, quad, nus=[0.0, 2.0])


@pytest.mark.slow
def test_numeric_workers_identical(large_spin_state):
    """Test de resultados idénticos byte a byte con varios hilos."""
    single = measure_report(large_spin_state, QuadratureSpec())
    threaded = measure_report(large_spin_state, QuadratureSpec(workers=4))
    assert single.model_dump() == threaded.model_dump()


def test_marginal_points_exact_for_truncated_state(superradiant_state, quad):
    """Test de marginal_husimi estable frente al número de nodos."""
    point = (-1.0, 0.8)
    base = marginal_husimi(superradiant_state, 1, point, quad)
    assert marginal_husimi(superradiant_state, 1, point, quad.doubled()) == pytest.approx(base, abs=1e-12)
    assert np.isfinite(base) and base > 0
