# app/variational.py
"""
Canal variacional: estados coherentes adaptados a la simetría (gatos de paridad).

Superficies de energía ℋ y ℋ±, puntos de equilibrio, distribuciones de Husimi
exacta y contraída del gato, medidas en forma cerrada o por integrales
reducidas, límites termodinámicos y funciones de onda.
"""
import logging
import math
from typing import Callable, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from app.exceptions import DomainError
from app.hamiltonian import critical_coupling
from app.schemas import (
    AnsatzState,
    DickeParams,
    EquilibriumConfig,
    MeasureReport,
    PhasePoint,
    PhasePointExact,
    RenyiEntry,
    measure_orders,
)
from app.special import glauber_amplitudes, spin_amplitudes

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
# Integrales reducidas (s, t): paso y margen del trapecio
REDUCED_STEP = 0.05
REDUCED_MARGIN = 9.0


# ===== EQUILIBRIO Y SUPERFICIES DE ENERGÍA =====
def equilibrium(params: DickeParams) -> EquilibriumConfig:
    """Minimizadores de ℋ: origen si λ < λ_c, desplazados si λ ≥ λ_c."""
    lc = critical_coupling(params)
    if params.lam < lc:
        return EquilibriumConfig(alpha_e=0.0, z_e=0.0, beta_e=0.0, phase="normal")
    mu = params.lam / lc
    root_2j = math.sqrt(params.two_j)
    z_e = math.sqrt((mu ** 2 - 1) / (mu ** 2 + 1))
    alpha_e = -root_2j * math.sqrt(params.omega0 / params.omega) * (mu / 2) * math.sqrt(1 - mu ** -4)
    return EquilibriumConfig(alpha_e=alpha_e, z_e=z_e, beta_e=root_2j * z_e, phase="superradiant")


def energy_surface(alpha, z, params: DickeParams):
    """ℋ(α, z) = ⟨α,z|H|α,z⟩."""
    alpha = np.asarray(alpha, dtype=complex)
    z = np.asarray(z, dtype=complex)
    z2 = np.abs(z) ** 2
    value = (
        params.omega * np.abs(alpha) ** 2
        + params.j * params.omega0 * (z2 - 1) / (z2 + 1)
        + params.lam * math.sqrt(params.two_j) * (2 * alpha.real) * (2 * z.real) / (z2 + 1)
    )
    return value if value.ndim else float(value)


def energy_surface_pm(alpha, z, params: DickeParams, branch: Literal["+", "-"] = "+"):
    """
    ℋ±(α, z) = (ℋ ± X) / (1 ± ⟨α,z|−α,−z⟩), con X = ⟨α,z|H|−α,−z⟩.
    """
    sign = 1 if branch == "+" else -1
    alpha = np.asarray(alpha, dtype=complex)
    z = np.asarray(z, dtype=complex)
    two_j = params.two_j
    a2 = np.abs(alpha) ** 2
    z2 = np.abs(z) ** 2
    r = (1 - z2) / (1 + z2)
    field_overlap = np.exp(-2 * a2)
    overlap = field_overlap * r ** two_j
    cross = field_overlap * (
        -params.omega * a2 * r ** two_j
        - params.j * params.omega0 * r ** (two_j - 1)
        - 4 * params.lam * math.sqrt(two_j) * alpha.imag * z.imag * r ** (two_j - 1) / (1 + z2)
    )
    denominator = 1 + sign * overlap
    if np.any(denominator <= 0):
        raise DomainError(
            "𝒩₋ = 0: la rama impar no está definida en α = z = 0"
        )
    value = (energy_surface(alpha, z, params) + sign * cross) / denominator
    return value if np.ndim(value) else float(value)


def variational_energy(params: DickeParams) -> float:
    """ℋ en el equilibrio: −jω₀ (normal) o −(jω₀/2)(μ² + μ⁻²)."""
    lc = critical_coupling(params)
    if params.lam < lc:
        return -params.j * params.omega0
    mu = params.lam / lc
    return -params.j * params.omega0 / 2 * (mu ** 2 + mu ** -2)


def ground_energy_variational(params: DickeParams) -> float:
    """ℋ₊(α_e, z_e): cota superior variacional de E₀."""
    eq = equilibrium(params)
    return energy_surface_pm(complex(eq.alpha_e), complex(eq.z_e), params, "+")


def lieb_bound(two_j: int) -> float:
    """Cota inferior de la entropía de Wehrl contraída: 1 + j/(j+1)."""
    j = two_j / 2
    return 1 + j / (j + 1)


def _gradient(func: Callable[[np.ndarray], float], point: np.ndarray, h: float) -> np.ndarray:
    """Gradiente por diferencias centradas de cinco puntos."""
    grad = np.zeros_like(point)
    for i in range(point.size):
        step = np.zeros_like(point)
        step[i] = h
        grad[i] = (
            -func(point + 2 * step) + 8 * func(point + step)
            - 8 * func(point - step) + func(point - 2 * step)
        ) / (12 * h)
    return grad


def energy_gradient(params: DickeParams, alpha: complex, z: complex, h: float = 1e-4) -> float:
    """‖∇ℋ‖ sobre (Re α, Im α, Re z, Im z)."""
    if h <= 0:
        raise ValueError("h debe ser positivo")

    def func(v: np.ndarray) -> float:
        return energy_surface(complex(v[0], v[1]), complex(v[2], v[3]), params)

    point = np.array([alpha.real, alpha.imag, z.real, z.imag], dtype=float)
    return float(np.linalg.norm(_gradient(func, point, h)))


def equilibrium_gradient_check(params: DickeParams, h: float = 1e-4) -> float:
    eq = equilibrium(params)
    return energy_gradient(params, complex(eq.alpha_e), complex(eq.z_e), h)


class RefinedEquilibrium(NamedTuple):
    alpha: float
    z: float
    energy: float
    closed_form_energy: float


def refine_equilibrium(params: DickeParams, branch: Literal["+", "-"] = "+") -> RefinedEquilibrium:
    """
    Minimiza ℋ± sobre (α, z) reales partiendo del equilibrio cerrado.
    Mide el error de la aproximación α_e^{(±)} ≈ α_e cerca de λ_c.
    """
    eq = equilibrium(params)
    at_origin = eq.alpha_e == 0 and eq.z_e == 0
    start = np.array([eq.alpha_e, eq.z_e])
    closed = float("nan")
    if branch == "-" and at_origin:
        start = np.array([-0.5, 0.2])
    else:
        closed = energy_surface_pm(complex(eq.alpha_e), complex(eq.z_e), params, branch)

    def objective(v: np.ndarray) -> float:
        try:
            return energy_surface_pm(complex(v[0]), complex(v[1]), params, branch)
        except DomainError:
            return float("inf")

    result = minimize(objective, start, method="L-BFGS-B")
    alpha, z = (float(x) for x in result.x)
    if alpha > 0:
        alpha, z = -alpha, -z
    logger.debug(f"Refinamiento ℋ{branch}: α={alpha:.6f} z={z:.6f} E={result.fun:.10f}")
    return RefinedEquilibrium(alpha, z, float(result.fun), closed)


# ===== ESTADO GATO =====
def make_ansatz(
    params: DickeParams, branch: Literal["+", "-"] = "+", eq: Optional[EquilibriumConfig] = None
) -> AnsatzState:
    eq = eq or equilibrium(params)
    if branch == "-" and eq.alpha_e == 0 and eq.z_e == 0:
        raise DomainError("La rama impar con α_e = z_e = 0 tiene 𝒩₋ = 0 (fase normal)")
    return AnsatzState(params=params, eq=eq, parity_branch=branch)


def cat_state_vector(alpha: complex, z: complex, params: DickeParams, branch: Literal["+", "-"] = "+") -> np.ndarray:
    """|α, z, ±⟩ en la base truncada, renormalizado; forma (n_c + 1, 2j + 1)."""
    sign = 1 if branch == "+" else -1
    a = glauber_amplitudes(params.n_cut, alpha)
    s = spin_amplitudes(params.two_j, z)
    n = np.arange(params.n_cut + 1)[:, None]
    k = np.arange(params.two_j + 1)[None, :]
    coeffs = np.outer(a, s) * (1 + sign * (-1.0) ** (n + k))
    norm = np.linalg.norm(coeffs)
    if norm == 0:
        raise DomainError("El estado gato es nulo para estos parámetros")
    return coeffs / norm


def ansatz_log_husimi(st: AnsatzState, a1, a2, b1, b2):
    """
    log Φ±(α, β) = −|α|² − |β|² − D + log(cosh 2X ± cos 2y) − log(1 ± e^{−2D}),
    X = α₁α_e + β₁β_e, y = α₂α_e + β₂β_e.
    """
    eq = st.eq
    sign = st.sign
    D = eq.displacement
    X = np.abs(a1 * eq.alpha_e + b1 * eq.beta_e)
    y = a2 * eq.alpha_e + b2 * eq.beta_e
    inner = np.maximum(np.exp(-4 * X) + 2 * sign * np.cos(2 * y) * np.exp(-2 * X), -1.0)
    with np.errstate(divide="ignore"):
        return (
            -(a1 ** 2 + a2 ** 2 + b1 ** 2 + b2 ** 2) - D
            + 2 * X - LN2 + np.log1p(inner)
            - math.log1p(sign * math.exp(-2 * D))
        )


def ansatz_husimi_hp(st: AnsatzState, p: PhasePoint) -> float:
    """Φ±(α, β) contraída, en forma cerrada."""
    return float(np.exp(ansatz_log_husimi(st, p.alpha1, p.alpha2, p.beta1, p.beta2)))


def ansatz_husimi_exact(st: AnsatzState, p: PhasePointExact) -> float:
    """Ψ±(α, z) con los solapamientos exactos de estados coherentes de espín."""
    eq = st.eq
    two_j = st.params.two_j
    alpha = complex(p.alpha)
    z = complex(p.z)
    base = (
        -abs(alpha) ** 2 / 2 - eq.alpha_e ** 2 / 2
        - (two_j / 2) * (math.log1p(abs(z) ** 2) + math.log1p(eq.z_e ** 2))
    )
    terms = []
    for s in (1, -1):
        spin = 1 + s * z.conjugate() * eq.z_e
        if spin == 0:
            terms.append(0j)
            continue
        exponent = base + s * alpha.conjugate() * eq.alpha_e + two_j * np.log(spin)
        terms.append(np.exp(exponent))
    overlap = math.exp(-2 * eq.alpha_e ** 2) * ((1 - eq.z_e ** 2) / (1 + eq.z_e ** 2)) ** two_j
    norm2 = 1 / (2 * (1 + st.sign * overlap))
    return float(norm2 * abs(terms[0] + st.sign * terms[1]) ** 2)


class AnsatzHusimi:
    """Evaluador de Φ± para el motor de cuadratura."""
    channel = "variational"

    def __init__(self, st: AnsatzState):
        self.st = st
        self.params = st.params
        self.n_cut = 0

    def axis_profile(self) -> List[Tuple[float, float]]:
        spread = 1 / math.sqrt(2)
        eq = self.st.eq
        return [(abs(eq.alpha_e), spread), (0.0, spread), (abs(eq.beta_e), spread), (0.0, spread)]

    def block_evaluator(self, a2: np.ndarray, b1: np.ndarray, b2: np.ndarray):
        A2 = a2[:, None, None]
        B1 = b1[None, :, None]
        B2 = b2[None, None, :]

        def evaluate(a1: float) -> np.ndarray:
            return np.exp(ansatz_log_husimi(self.st, a1, A2, B1, B2))

        return evaluate

    def __call__(self, p: PhasePoint) -> float:
        return ansatz_husimi_hp(self.st, p)


# ===== FORMAS CERRADAS =====
def analytic_ipr(params: DickeParams) -> float:
    """P = (1 + sech²(α_e² + β_e²)) / 8."""
    D = equilibrium(params).displacement
    return (1 + 1 / math.cosh(D) ** 2) / 8


def analytic_marginal_husimi(st: AnsatzState, kappa: int, point: Tuple[float, float]) -> float:
    """Φ₁ (forma cosh) o Φ₂ (forma cos) del gato."""
    a, b = point
    eq = st.eq
    sign = st.sign
    D = eq.displacement
    denominator = 1 + sign * math.exp(-2 * D)
    if kappa == 1:
        X = a * eq.alpha_e + b * eq.beta_e
        peaks = math.exp(-a ** 2 - b ** 2 - D) * math.cosh(2 * X)
        return (sign * math.exp(-2 * D) * math.exp(-a ** 2 - b ** 2) + peaks) / denominator
    if kappa == 2:
        y = a * eq.alpha_e + b * eq.beta_e
        return math.exp(-a ** 2 - b ** 2) * (1 + sign * math.exp(-D) * math.cos(2 * y)) / denominator
    raise ValueError(f"κ={kappa} inválido; use 1 o 2")


def analytic_marginal_ipr(params: DickeParams) -> Tuple[float, float]:
    """
    P⁽¹⁾ y P⁽²⁾ como funciones racionales de ζ = e^{α_e² + β_e²}
    (se evalúan con ε = 1/ζ para no desbordar).
    """
    eps = math.exp(-equilibrium(params).displacement)
    denominator = 4 * (1 + eps ** 2) ** 2
    p1 = (2 * eps ** 4 + 4 * eps ** 2.5 + eps ** 2 + 1) / denominator
    p2 = (eps ** 4 + eps ** 2 + 4 * eps ** 1.5 + 2) / denominator
    return p1, p2


ThermoKind = Literal["joint", "marginal1", "marginal2", "wehrl", "wehrl1", "wehrl2"]


def thermo_limits(nu: Optional[float], phase: Literal["normal", "superradiant"], kind: ThermoKind) -> float:
    """Valores j → ∞ de momentos y entropías."""
    superradiant = phase == "superradiant"
    if kind in ("joint", "marginal1", "marginal2"):
        if nu is None or nu <= 0:
            raise ValueError("ν debe ser positivo para los momentos")
        power = 2 if kind == "joint" else 1
        base = nu ** -power
        if superradiant and kind != "marginal2":
            base *= 2 ** (1 - nu)
        return base
    if kind == "wehrl":
        return 2 + LN2 if superradiant else 2.0
    if kind == "wehrl1":
        return 1 + LN2 if superradiant else 1.0
    if kind == "wehrl2":
        return 1.0
    raise ValueError(f"Tipo '{kind}' desconocido")


# ===== MEDIDAS POR INTEGRALES REDUCIDAS =====
def _uniform_rule(halfwidth: float, step: float = REDUCED_STEP) -> Tuple[np.ndarray, np.ndarray]:
    count = int(math.ceil(2 * halfwidth / step)) + 1
    nodes = np.linspace(-halfwidth, halfwidth, count)
    h = nodes[1] - nodes[0]
    weights = np.full(count, h)
    weights[0] = weights[-1] = h / 2
    return nodes, weights


def _log_reduced_joint(st: AnsatzState, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """
    log G(s, t): Φ± tras rotar (α₁, β₁) y (α₂, β₂) hacia (α_e, β_e)/L e
    integrar analíticamente las dos direcciones ortogonales.
    """
    D = st.eq.displacement
    L = math.sqrt(D)
    sign = st.sign
    log_peaks = np.logaddexp(-(s - L) ** 2, -(s + L) ** 2) - LN2
    ratio = np.exp(-s ** 2 - D - log_peaks) * sign * np.cos(2 * L * t)
    with np.errstate(divide="ignore"):
        return -t ** 2 + log_peaks + np.log1p(np.maximum(ratio, -1.0)) - math.log1p(sign * math.exp(-2 * D))


def _marginal_profiles(st: AnsatzState, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    D = st.eq.displacement
    L = math.sqrt(D)
    sign = st.sign
    denominator = 1 + sign * math.exp(-2 * D)
    f1 = (sign * math.exp(-2 * D) * np.exp(-s ** 2) + 0.5 * (np.exp(-(s - L) ** 2) + np.exp(-(s + L) ** 2))) / denominator
    f2 = np.exp(-s ** 2) * (1 + sign * math.exp(-D) * np.cos(2 * L * s)) / denominator
    return np.maximum(f1, 0.0), np.maximum(f2, 0.0)


def _profile_measures(f: np.ndarray, weights: np.ndarray, nus: Sequence[float]) -> Tuple[List[RenyiEntry], float, float]:
    """Momentos y entropía de una marginal f(s) e^{−t²}: M_ν = ∫f^ν/√(πν)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        log_f = np.log(f)
        log_moments = {
            nu: float(logsumexp(nu * log_f + np.log(weights))) - 0.5 * math.log(math.pi * nu) for nu in nus
        }
        f_log_f = np.where(f > 1e-300, f * log_f, 0.0)
    total = float(np.sum(weights * f))
    wehrl = (0.5 * total - float(np.sum(weights * f_log_f))) / math.sqrt(math.pi)
    entries = [RenyiEntry.from_log_moment(nu, log_moments[nu], wehrl) for nu in nus]
    p = next(e.moment for e in entries if e.nu == 2.0)
    return entries, p, wehrl


def ansatz_measures(st: AnsatzState, nus: Sequence[float] = (0.5, 1.5, 2.0, 3.0, 4.0)) -> MeasureReport:
    """Medidas del canal variacional sin rejilla 4-D."""
    nus = measure_orders(nus)
    L = math.sqrt(st.eq.displacement)
    s, ws = _uniform_rule(L + REDUCED_MARGIN)
    t, wt = _uniform_rule(REDUCED_MARGIN)
    log_g = _log_reduced_joint(st, s[:, None], t[None, :])
    log_w = np.log(ws[:, None] * wt[None, :])

    def log_moment(nu: float) -> float:
        return float(logsumexp(nu * log_g + log_w)) - math.log(math.pi * nu)

    norm = math.exp(log_moment(1.0))
    g = np.exp(log_g)
    with np.errstate(invalid="ignore"):
        g_log_g = np.where(g > 1e-300, g * log_g, 0.0)
    wehrl = norm - float(np.sum(ws[:, None] * wt[None, :] * g_log_g)) / math.pi
    renyi = [RenyiEntry.from_log_moment(nu, log_moment(nu), wehrl) for nu in nus]

    f1, f2 = _marginal_profiles(st, s)
    marginal1, p1, w1 = _profile_measures(f1, ws, nus)
    marginal2, p2, w2 = _profile_measures(f2, ws, nus)

    return MeasureReport(
        channel="variational", lam=st.params.lam, two_j=st.params.two_j, n_cut=0,
        norm=norm, P=next(e.moment for e in renyi if e.nu == 2.0), W=wehrl, renyi=renyi,
        P1=p1, P2=p2, W1=w1, W2=w2, marginal1=marginal1, marginal2=marginal2,
    )


# ===== FUNCIONES DE ONDA =====
def ansatz_wavefunction(st: AnsatzState, space: Literal["position", "momentum"], x, y):
    """
    Gato par en el límite contraído: dos paquetes gaussianos en posición,
    gaussiana por coseno en momento.
    """
    if st.parity_branch != "+":
        raise DomainError("La función de onda cerrada se define para la rama par")
    p = st.params
    eq = st.eq
    D = eq.displacement
    norm = 1 / math.sqrt(2 * (1 + math.exp(-2 * D)))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if space == "position":
        x_e = math.sqrt(2 / p.omega) * eq.alpha_e
        y_e = math.sqrt(2 / p.omega0) * eq.beta_e
        prefactor = norm * (p.omega * p.omega0) ** 0.25 / math.sqrt(math.pi)
        value = prefactor * (
            np.exp(-p.omega * (x - x_e) ** 2 / 2 - p.omega0 * (y - y_e) ** 2 / 2)
            + np.exp(-p.omega * (x + x_e) ** 2 / 2 - p.omega0 * (y + y_e) ** 2 / 2)
        )
    elif space == "momentum":
        u = x / math.sqrt(p.omega)
        v = y / math.sqrt(p.omega0)
        prefactor = 2 * norm * (p.omega * p.omega0) ** -0.25 / math.sqrt(math.pi)
        value = prefactor * np.exp(-(u ** 2 + v ** 2) / 2) * np.cos(math.sqrt(2) * (eq.alpha_e * u + eq.beta_e * v))
    else:
        raise ValueError(f"Espacio '{space}' desconocido; use position o momentum")
    return value if value.ndim else float(value)
