# app/coherent.py
import logging
import math
from typing import List, Tuple

import numpy as np

from app.exceptions import NormalizationError
from app.quadrature import axis_rule, check_coverage, integrate_husimi
from app.schemas import GroundState, PhasePoint, PhasePointExact, QuadratureSpec
from app.special import glauber_amplitudes, spin_amplitudes
from app.variational import equilibrium

logger = logging.getLogger(__name__)


def glauber_amplitude(n: int, alpha: complex) -> complex:
    """⟨n|α⟩ = e^{-|α|²/2} αⁿ / sqrt(n!)."""
    if n < 0:
        raise ValueError("n debe ser no negativo")
    return complex(glauber_amplitudes(n, alpha)[n])


def spin_amplitude(m_index: int, z: complex, two_j: int) -> complex:
    """⟨j, m|z⟩ con k = m_index = j + m."""
    if not 0 <= m_index <= two_j:
        raise ValueError(f"m_index={m_index} fuera de 0..{two_j}")
    return complex(spin_amplitudes(two_j, z)[m_index])


def husimi_exact_values(gs: GroundState, alpha, z) -> np.ndarray:
    """Ψ(α, z) = |Σ c_{nk} ⟨α|n⟩⟨z|j,m⟩|² sobre arreglos compatibles."""
    alpha, z = np.broadcast_arrays(np.asarray(alpha, dtype=complex), np.asarray(z, dtype=complex))
    A = glauber_amplitudes(gs.params.n_cut, alpha)
    S = spin_amplitudes(gs.params.two_j, z)
    amplitude = np.einsum("n...,nk,k...->...", A, gs.coeffs, S)
    return np.minimum(np.abs(amplitude) ** 2, 1.0)


def husimi_exact(gs: GroundState, p: PhasePointExact) -> float:
    return float(husimi_exact_values(gs, p.alpha, p.z))


def husimi_hp_values(gs: GroundState, alpha, beta) -> np.ndarray:
    """Φ(α, β) con |j, m⟩ ≡ |m + j⟩ y β = sqrt(2j) z."""
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=complex), np.asarray(beta, dtype=complex))
    A = glauber_amplitudes(gs.params.n_cut, alpha)
    B = glauber_amplitudes(gs.params.two_j, beta)
    amplitude = np.einsum("n...,nk,k...->...", A, gs.coeffs, B)
    return np.minimum(np.abs(amplitude) ** 2, 1.0)


def husimi_hp(gs: GroundState, p: PhasePoint) -> float:
    return float(husimi_hp_values(gs, p.alpha, p.beta))


def _ladder(size: int, sign: int) -> np.ndarray:
    """Matriz de a + sign·a† en la base de Fock truncada."""
    off = np.sqrt(np.arange(1, size, dtype=float))
    return np.diag(off, 1) + sign * np.diag(off, -1)


def husimi_axis_spreads(gs: GroundState, centers: Tuple[float, float, float, float]) -> List[float]:
    """
    Dispersión residual de Φ por eje a partir de los momentos antinormales:
    E[α₁²] = (⟨(a+a†)²⟩ + 1)/4, E[α₂²] = (‖(a−a†)ψ‖² + 1)/4, idem para β.
    """
    C = gs.coeffs
    n_size, k_size = C.shape
    second = [
        (float(np.sum((_ladder(n_size, 1) @ C) ** 2)) + 1) / 4,
        (float(np.sum((_ladder(n_size, -1) @ C) ** 2)) + 1) / 4,
        (float(np.sum((C @ _ladder(k_size, 1).T) ** 2)) + 1) / 4,
        (float(np.sum((C @ _ladder(k_size, -1).T) ** 2)) + 1) / 4,
    ]
    return [math.sqrt(max(m - c ** 2, 0.5)) for m, c in zip(second, centers)]


class NumericHusimi:
    """Evaluador de Φ(α, β) de un estado diagonalizado para el motor de cuadratura."""
    channel = "numeric"

    def __init__(self, gs: GroundState):
        self.gs = gs
        self.params = gs.params
        self.n_cut = gs.params.n_cut

    def axis_profile(self) -> List[Tuple[float, float]]:
        eq = equilibrium(self.gs.params)
        centers = (abs(eq.alpha_e), 0.0, abs(eq.beta_e), 0.0)
        return list(zip(centers, husimi_axis_spreads(self.gs, centers)))

    def block_evaluator(self, a2: np.ndarray, b1: np.ndarray, b2: np.ndarray):
        p = self.gs.params
        beta = (b1[:, None] + 1j * b2[None, :]).ravel()
        CB = self.gs.coeffs @ glauber_amplitudes(p.two_j, beta)
        shape = (len(a2), len(b1), len(b2))

        def evaluate(a1: float) -> np.ndarray:
            A = glauber_amplitudes(p.n_cut, a1 + 1j * a2)
            return (np.abs(A.T @ CB) ** 2).reshape(shape)

        return evaluate

    def __call__(self, p: PhasePoint) -> float:
        return husimi_hp(self.gs, p)


def check_normalization(gs: GroundState, quad: QuadratureSpec) -> float:
    """
    ∫ Φ d²α d²β / π². Si falla la tolerancia se repite con el doble de nodos
    para distinguir falta de nodos de falta de dominio.
    """
    evaluator = NumericHusimi(gs)
    integrals = integrate_husimi(evaluator, quad)
    check_coverage(integrals, quad)
    norm = math.exp(integrals.log_moments[1.0])
    if abs(norm - 1) <= quad.target_tol:
        return norm
    refined = math.exp(integrate_husimi(evaluator, quad.doubled()).log_moments[1.0])
    cause = "nodos" if abs(refined - 1) <= quad.target_tol else "dominio"
    raise NormalizationError(norm, quad.target_tol, cause)


def closure_check(n: int, quad: QuadratureSpec) -> float:
    """∫ |⟨n|α⟩|² d²α / π (resolución de la identidad)."""
    spread = math.sqrt((n + 1) / 2)
    ax1 = axis_rule("alpha1", 0.0, spread, quad)
    ax2 = axis_rule("alpha2", 0.0, spread, quad)
    alpha = ax1.nodes[:, None] + 1j * ax2.nodes[None, :]
    density = np.abs(glauber_amplitudes(n, alpha)[n]) ** 2
    weights = ax1.weights[:, None] * ax2.weights[None, :]
    return float(np.sum(weights * density)) / math.pi
