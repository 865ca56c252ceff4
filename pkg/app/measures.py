# app/measures.py
"""
Medidas de información sobre la distribución de Husimi contraída:
momentos M_ν, razón de participación inversa, entropías de Rényi-Wehrl y de
Wehrl, marginales Φ₁ (posición) y Φ₂ (momento) y sus medidas.

Todas las funciones aceptan un estado diagonalizado (GroundState), un gato
variacional (AnsatzState) o directamente un evaluador del motor de cuadratura.
"""
import logging
import math
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from app.coherent import NumericHusimi, husimi_hp_values
from app.exceptions import NormalizationError
from app.quadrature import HusimiEvaluator, HusimiIntegrals, check_coverage, integrate_husimi, plane_measures
from app.schemas import (
    DEFAULT_NUS,
    AnsatzState,
    GroundState,
    MeasureReport,
    QuadratureSpec,
    RenyiEntry,
    measure_orders,
)
from app.special import gauss_hermite_plain
from app.variational import AnsatzHusimi, ansatz_log_husimi

logger = logging.getLogger(__name__)

HusimiSource = Union[GroundState, AnsatzState, HusimiEvaluator]


def as_evaluator(phi: HusimiSource) -> HusimiEvaluator:
    if isinstance(phi, GroundState):
        return NumericHusimi(phi)
    if isinstance(phi, AnsatzState):
        return AnsatzHusimi(phi)
    return phi


def measure_integrals(phi: HusimiSource, quad: QuadratureSpec, nus: Sequence[float] = ()) -> HusimiIntegrals:
    """
    Pasada de cuadratura con las dos compuertas: cobertura del dominio y norma.
    Ninguna medida se reporta si M₁ se aleja de 1 más que target_tol.
    """
    integrals = integrate_husimi(as_evaluator(phi), quad, nus)
    check_coverage(integrals, quad)
    norm = math.exp(integrals.log_moments[1.0])
    if abs(norm - 1) > quad.target_tol:
        raise NormalizationError(norm, quad.target_tol, "nodos")
    return integrals


def _check_nu(nu: float) -> None:
    if not nu > 0:
        raise ValueError(f"ν={nu} debe ser positivo")


def moment_nu(phi: HusimiSource, nu: float, quad: QuadratureSpec) -> float:
    """M_ν = ∫ Φ^ν d²α d²β / π²; con ν = 1 devuelve la norma."""
    _check_nu(nu)
    return math.exp(measure_integrals(phi, quad, [nu]).log_moments[nu])


def participation_ratio(phi: HusimiSource, quad: QuadratureSpec) -> float:
    return moment_nu(phi, 2.0, quad)


def renyi_wehrl(phi: HusimiSource, nu: float, quad: QuadratureSpec) -> float:
    """W_ν = ln M_ν / (1 − ν), calculada desde log M_ν."""
    _check_nu(nu)
    if nu == 1:
        raise ValueError("ν = 1 corresponde a wehrl_entropy")
    return measure_integrals(phi, quad, [nu]).log_moments[nu] / (1 - nu)


def wehrl_entropy(phi: HusimiSource, quad: QuadratureSpec) -> float:
    """W = −∫ Φ ln Φ d²α d²β / π² (0·ln 0 = 0)."""
    return measure_integrals(phi, quad).wehrl


# ===== MARGINALES =====
def _pointwise(phi: Union[GroundState, AnsatzState]):
    if isinstance(phi, GroundState):
        return lambda a1, a2, b1, b2: husimi_hp_values(phi, a1 + 1j * a2, b1 + 1j * b2)
    return lambda a1, a2, b1, b2: np.exp(ansatz_log_husimi(phi, a1, a2, b1, b2))


def marginal_husimi(
    phi: Union[GroundState, AnsatzState], kappa: int, point: Tuple[float, float], quad: QuadratureSpec
) -> float:
    """
    Φ_κ(a, b) integrando Φ sobre el par complementario con Gauss-Hermite.
    κ = 1: (a, b) = (α₁, β₁); κ = 2: (a, b) = (α₂, β₂).
    Para un estado truncado la regla es exacta con N ≥ max(n_c, 2j) + 1 nodos.
    """
    if kappa not in (1, 2):
        raise ValueError(f"κ={kappa} inválido; use 1 o 2")
    a, b = point
    n = quad.nodes_per_axis
    if isinstance(phi, GroundState):
        n = max(n, phi.params.n_cut + 1, phi.params.two_j + 1)
    nodes, weights = gauss_hermite_plain(n)
    u = nodes[:, None]
    v = nodes[None, :]
    if kappa == 1:
        values = _pointwise(phi)(a, u, b, v)
    else:
        values = _pointwise(phi)(u, a, v, b)
    return float(np.sum(weights[:, None] * weights[None, :] * values)) / math.pi


def _marginal_entries(log_moments: Dict[float, float], nus: Sequence[float], wehrl: float) -> List[RenyiEntry]:
    return [RenyiEntry.from_log_moment(nu, log_moments[nu], wehrl) for nu in nus]


def marginal_measures(
    phi: HusimiSource, kappa: int, quad: QuadratureSpec, nus: Sequence[float] = DEFAULT_NUS
) -> Tuple[float, float, List[RenyiEntry]]:
    """(P_κ, W_κ, [M_{ν,κ}]) con la medida d²/π de la marginal."""
    if kappa not in (1, 2):
        raise ValueError(f"κ={kappa} inválido; use 1 o 2")
    nus = measure_orders(nus)
    integrals = measure_integrals(phi, quad)
    ax1, ax2, ax3, ax4 = integrals.axes
    if kappa == 1:
        log_moments, wehrl = plane_measures(integrals.phi1, ax1, ax3, nus)
    else:
        log_moments, wehrl = plane_measures(integrals.phi2, ax2, ax4, nus)
    return math.exp(log_moments[2.0]), wehrl, _marginal_entries(log_moments, nus, wehrl)


# ===== REPORTE COMPLETO =====
def measure_report(
    phi: HusimiSource, quad: QuadratureSpec, nus: Sequence[float] = DEFAULT_NUS
) -> MeasureReport:
    """Una pasada 4-D produce el reporte conjunto y el de las dos marginales."""
    evaluator = as_evaluator(phi)
    nus = measure_orders(nus)
    integrals = measure_integrals(evaluator, quad, nus)
    ax1, ax2, ax3, ax4 = integrals.axes
    renyi = [RenyiEntry.from_log_moment(nu, integrals.log_moments[nu], integrals.wehrl) for nu in nus]
    log_m1, w1 = plane_measures(integrals.phi1, ax1, ax3, nus)
    log_m2, w2 = plane_measures(integrals.phi2, ax2, ax4, nus)
    params = evaluator.params
    report = MeasureReport(
        channel=evaluator.channel, lam=params.lam, two_j=params.two_j, n_cut=evaluator.n_cut,
        norm=math.exp(integrals.log_moments[1.0]), P=math.exp(integrals.log_moments[2.0]),
        W=integrals.wehrl, renyi=renyi,
        P1=math.exp(log_m1[2.0]), P2=math.exp(log_m2[2.0]), W1=w1, W2=w2,
        marginal1=_marginal_entries(log_m1, nus, w1), marginal2=_marginal_entries(log_m2, nus, w2),
    )
    logger.debug(f"{report.channel} λ={report.lam}: P={report.P:.6f} W={report.W:.6f}")
    return report


def factorization_gap(report: MeasureReport) -> Tuple[float, float]:
    """(P − P₁P₂, W − W₁ − W₂); sin supuesto de signo."""
    return report.P - report.P1 * report.P2, report.W - report.W1 - report.W2
