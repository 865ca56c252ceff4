# app/smearing.py
"""
Marginales de Husimi como suavizados gaussianos de las densidades en posición
y momento (varianza natural σ² = 1/(2ω), sólo en resonancia ω = ω₀).

ξ(r) = (ω/2π) Φ₁(r/2σ) y ξ̃(k) = (2π/ω) Φ₂(σk); las integrales de solapamiento
I_{n,n'} son sumas finitas de polinomios de Hermite.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.special import eval_hermite, gammaln

from app.coherent import NumericHusimi
from app.exceptions import HermiteDegreeError, NumericalInstabilityError, QuadratureCoverageError, ResonanceError
from app.measures import marginal_husimi
from app.quadrature import TINY, axis_rule
from app.schemas import DickeParams, GroundState, PhasePoint, QuadratureSpec, SmearingConfig
from app.special import hermite_functions

logger = logging.getLogger(__name__)

# Rango estable de eval_hermite antes del desborde de e^{-v²/2}·H_m
MAX_DIRECT_DEGREE = 150
NEGATIVE_TOL = 1e-12
LN2 = math.log(2.0)


def smearing_config(params: DickeParams) -> SmearingConfig:
    if not math.isclose(params.omega, params.omega0, rel_tol=0, abs_tol=1e-14):
        raise ResonanceError(params.omega, params.omega0)
    return SmearingConfig(sigma2=1 / (2 * params.omega), omega=params.omega)


# ===== CAMBIO DE COORDENADAS =====
def coord_map(point: PhasePoint, cfg: SmearingConfig) -> Tuple[float, float, float, float]:
    """(α₁, α₂, β₁, β₂) → (x, y, k_x, k_y) con α₁ = x/2σ, α₂ = σk_x."""
    two_sigma = 2 * cfg.sigma
    return (
        two_sigma * point.alpha1,
        two_sigma * point.beta1,
        point.alpha2 / cfg.sigma,
        point.beta2 / cfg.sigma,
    )


def inverse_coord_map(x: float, y: float, k_x: float, k_y: float, cfg: SmearingConfig) -> PhasePoint:
    two_sigma = 2 * cfg.sigma
    return PhasePoint(x / two_sigma, cfg.sigma * k_x, y / two_sigma, cfg.sigma * k_y)


# ===== INTEGRALES DE HERMITE =====
def _log_terms(n: int, n_prime: int, log_space: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Grados m = n + n' − 2k y log de sus coeficientes en la suma finita."""
    k = np.arange(min(n, n_prime) + 1)
    m = n + n_prime - 2 * k
    log_coef = (
        k * math.log(4.0)
        + 0.5 * (gammaln(n + 1) + gammaln(n_prime + 1))
        - gammaln(k + 1) - gammaln(n - k + 1) - gammaln(n_prime - k + 1)
        - (n + n_prime) * LN2
    )
    if log_space:
        # e^{-u²} H_m(u) = h_m(u) e^{-u²/2} sqrt(2^m m! sqrt(π))
        log_coef = log_coef + 0.5 * (m * LN2 + gammaln(m + 1) + 0.5 * math.log(math.pi))
    return m, log_coef


def hermite_integral(
    n: int, n_prime: int, x, cfg: SmearingConfig, log_space: bool = False, frequency: Optional[float] = None
):
    """
    I_{n,n'}(x) = ∫ φ_n(x') φ_{n'}(x') g_σ(x − x') dx'
               = (A/√2) e^{-v²/2} 2^{-(n+n')} sqrt(n! n'!) Σ_k 4^k H_{n+n'-2k}(v/√2) / (k!(n−k)!(n'−k)!)
    con v = √ω x y A = sqrt(ω/π).
    """
    if n < 0 or n_prime < 0:
        raise ValueError("Los índices de Hermite deben ser no negativos")
    w = cfg.omega if frequency is None else frequency
    v = math.sqrt(w) * np.asarray(x, dtype=float)
    u = v / math.sqrt(2.0)
    prefactor = math.sqrt(w / math.pi) / math.sqrt(2.0)
    m, log_coef = _log_terms(n, n_prime, log_space)
    if log_space:
        h = hermite_functions(n + n_prime, u)
        value = prefactor * np.exp(-0.5 * u ** 2) * np.tensordot(np.exp(log_coef), h[m], axes=1)
    else:
        if n + n_prime > MAX_DIRECT_DEGREE:
            raise HermiteDegreeError(n + n_prime, MAX_DIRECT_DEGREE)
        H = np.stack([eval_hermite(int(d), u) for d in m])
        value = prefactor * np.exp(-u ** 2) * np.tensordot(np.exp(log_coef), H, axes=1)
    return value if np.ndim(value) else float(value)


def hermite_integral_table(n_max: int, x, frequency: float) -> np.ndarray:
    """Tabla simétrica I[n, n', i] para n, n' ≤ n_max, en espacio logarítmico."""
    x = np.asarray(x, dtype=float)
    u = math.sqrt(frequency) * x / math.sqrt(2.0)
    h = hermite_functions(2 * n_max, u)
    prefactor = math.sqrt(frequency / math.pi) / math.sqrt(2.0) * np.exp(-0.5 * u ** 2)
    table = np.empty((n_max + 1, n_max + 1) + x.shape)
    for n in range(n_max + 1):
        for n_prime in range(n, n_max + 1):
            m, log_coef = _log_terms(n, n_prime, log_space=True)
            row = prefactor * np.tensordot(np.exp(log_coef), h[m], axes=1)
            table[n, n_prime] = row
            table[n_prime, n] = row
    return table


# ===== DENSIDADES SUAVIZADAS =====
def _momentum_coeffs(gs: GroundState) -> np.ndarray:
    n = np.arange(gs.params.n_cut + 1)[:, None]
    k = np.arange(gs.params.two_j + 1)[None, :]
    return gs.coeffs * (-1j) ** (n + k)


def _check_positive(values: np.ndarray, what: str) -> np.ndarray:
    lowest = float(np.min(values)) if values.size else 0.0
    if lowest < -NEGATIVE_TOL:
        raise NumericalInstabilityError(what, lowest)
    return np.maximum(values, 0.0)


def _position_tables(gs: GroundState, x, y, cfg: SmearingConfig):
    p = gs.params
    return hermite_integral_table(p.n_cut, x, cfg.omega), hermite_integral_table(p.two_j, y, cfg.omega)


def _momentum_tables(gs: GroundState, k_x, k_y, cfg: SmearingConfig):
    p = gs.params
    return hermite_integral_table(p.n_cut, k_x, 1 / cfg.omega), hermite_integral_table(p.two_j, k_y, 1 / cfg.omega)


def smeared_position_density(gs: GroundState, x, y, cfg: SmearingConfig):
    """ξ(x, y) = Σ c_{nk} c_{n'k'} I_{n,n'}(x) I_{k,k'}(y) sobre puntos (x_i, y_i)."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    Ix, Iy = _position_tables(gs, x.ravel(), y.ravel(), cfg)
    C = gs.coeffs
    T = np.einsum("nk,kli,ml->nmi", C, Iy, C)
    value = _check_positive(np.einsum("nmi,nmi->i", Ix, T), "ξ(x, y)").reshape(x.shape)
    return value if value.ndim else float(value)


def smeared_position_grid(gs: GroundState, x, y, cfg: SmearingConfig) -> np.ndarray:
    """ξ sobre la rejilla producto x ⊗ y, forma (len(x), len(y))."""
    Ix, Iy = _position_tables(gs, x, y, cfg)
    C = gs.coeffs
    T = np.einsum("nk,klb,ml->nmb", C, Iy, C)
    return _check_positive(np.einsum("nma,nmb->ab", Ix, T), "ξ(x, y)")


def smeared_momentum_density(gs: GroundState, k_x, k_y, cfg: SmearingConfig):
    """ξ̃(k) = (2π)² Σ d_{nk} d*_{n'k'} I_{n,n'}(k_x) I_{k,k'}(k_y), d = (−i)^{n+k} c."""
    k_x, k_y = np.broadcast_arrays(np.asarray(k_x, dtype=float), np.asarray(k_y, dtype=float))
    Ix, Iy = _momentum_tables(gs, k_x.ravel(), k_y.ravel(), cfg)
    D = _momentum_coeffs(gs)
    T = np.einsum("nk,kli,ml->nmi", D, Iy, D.conj())
    value = (2 * math.pi) ** 2 * np.einsum("nmi,nmi->i", Ix, T).real
    value = _check_positive(value, "ξ̃(k)").reshape(k_x.shape)
    return value if value.ndim else float(value)


def smeared_momentum_grid(gs: GroundState, k_x, k_y, cfg: SmearingConfig) -> np.ndarray:
    Ix, Iy = _momentum_tables(gs, k_x, k_y, cfg)
    D = _momentum_coeffs(gs)
    T = np.einsum("nk,klb,ml->nmb", D, Iy, D.conj())
    return _check_positive((2 * math.pi) ** 2 * np.einsum("nma,nmb->ab", Ix, T).real, "ξ̃(k)")


def smeared_marginal_husimi(gs: GroundState, kappa: int, point: Tuple[float, float], cfg: SmearingConfig) -> float:
    """Φ₁(a, b) = (2π/ω) ξ(2σa, 2σb); Φ₂(a, b) = (ω/2π) ξ̃(a/σ, b/σ)."""
    a, b = point
    if kappa == 1:
        two_sigma = 2 * cfg.sigma
        return 2 * math.pi / cfg.omega * smeared_position_density(gs, two_sigma * a, two_sigma * b, cfg)
    if kappa == 2:
        return cfg.omega / (2 * math.pi) * smeared_momentum_density(gs, a / cfg.sigma, b / cfg.sigma, cfg)
    raise ValueError(f"κ={kappa} inválido; use 1 o 2")


def marginal_fast_path(gs: GroundState, kappa: int, point: Tuple[float, float], quad: QuadratureSpec) -> float:
    """Marginal por la suma cerrada; fuera de resonancia cae a la cuadratura directa."""
    try:
        cfg = smearing_config(gs.params)
    except ResonanceError as exc:
        logger.warning(f"⚠️ {exc.detail}; se usa la cuadratura directa de la marginal")
        return marginal_husimi(gs, kappa, point, quad)
    return smeared_marginal_husimi(gs, kappa, point, cfg)


# ===== MEDIDAS =====
def _entropy(weights: np.ndarray, values: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(values > TINY, values * np.log(values), 0.0)
    return -float(np.sum(weights * terms))


def smeared_measures(
    gs: GroundState, cfg: SmearingConfig, quad: Optional[QuadratureSpec] = None
) -> Tuple[float, float, float, float]:
    """
    (P^ξ, P^ξ̃, W^ξ, W^ξ̃) con W = −∫ρ ln ρ; en momento la medida es d²k/(2π)².
    Los nodos son los del motor de cuadratura llevados a (x, y) y (k_x, k_y).
    """
    quad = quad or QuadratureSpec()
    profile = NumericHusimi(gs).axis_profile()
    ax1, ax2, ax3, ax4 = (
        axis_rule(name, center, spread, quad)
        for name, (center, spread) in zip(("x", "k_x", "y", "k_y"), profile)
    )
    two_sigma = 2 * cfg.sigma
    xi = smeared_position_grid(gs, two_sigma * ax1.nodes, two_sigma * ax3.nodes, cfg)
    w_pos = two_sigma ** 2 * ax1.weights[:, None] * ax3.weights[None, :]
    xi_tilde = smeared_momentum_grid(gs, ax2.nodes / cfg.sigma, ax4.nodes / cfg.sigma, cfg)
    w_mom = ax2.weights[:, None] * ax4.weights[None, :] / (cfg.sigma2 * (2 * math.pi) ** 2)

    # Umbral de borde en la escala de Φ_κ
    for name, grid, scale in (("x", xi, 2 * math.pi / cfg.omega), ("k_x", xi_tilde, cfg.omega / (2 * math.pi))):
        edge = scale * float(max(grid[0].max(), grid[-1].max(), grid[:, 0].max(), grid[:, -1].max()))
        if edge > quad.edge_tol:
            raise QuadratureCoverageError(name, edge, quad.edge_tol)

    p_xi = float(np.sum(w_pos * xi ** 2))
    p_xi_tilde = float(np.sum(w_mom * xi_tilde ** 2))
    w_xi = _entropy(w_pos, xi)
    w_xi_tilde = _entropy(w_mom, xi_tilde)
    logger.debug(f"Suavizado λ={gs.params.lam}: P^ξ={p_xi:.8f} P^ξ̃={p_xi_tilde:.8f}")
    return p_xi, p_xi_tilde, w_xi, w_xi_tilde


def smeared_to_marginal(measures: Tuple[float, float, float, float], omega: float) -> Tuple[float, float, float, float]:
    """Relaciones de conversión: (P⁽¹⁾, P⁽²⁾, W⁽¹⁾, W⁽²⁾) desde las medidas suavizadas."""
    p_xi, p_xi_tilde, w_xi, w_xi_tilde = measures
    factor = 2 * math.pi / omega
    return p_xi * factor, p_xi_tilde / factor, w_xi - math.log(factor), w_xi_tilde + math.log(factor)
