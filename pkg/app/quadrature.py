# app/quadrature.py
"""
Motor de cuadratura del espacio fásico contraído (α₁, α₂, β₁, β₂).

La rejilla es un producto tensorial de reglas 1-D. Los bloques se recorren por
nodo de α₁ (tamaño de bloque fijo), opcionalmente en hilos, y los parciales se
combinan siempre en el mismo orden: el resultado no depende del número de hilos.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from app.exceptions import ConfigError, QuadratureCoverageError
from app.schemas import QuadratureSpec
from app.special import gauss_hermite_plain, largest_hermite_root

logger = logging.getLogger(__name__)

AXIS_NAMES = ("alpha1", "alpha2", "beta1", "beta2")
MAX_GH_NODES = 400
# Umbral de 0·ln 0
TINY = 1e-300
LOG_PI = math.log(math.pi)


class AxisRule(NamedTuple):
    name: str
    nodes: np.ndarray
    weights: np.ndarray
    halfwidth: float


class HusimiEvaluator(Protocol):
    """Distribución de Husimi evaluable por bloques sobre la rejilla tensorial."""
    channel: str

    def axis_profile(self) -> List[Tuple[float, float]]:
        """(centro, dispersión) por eje, en el orden de AXIS_NAMES."""
        ...

    def block_evaluator(self, a2: np.ndarray, b1: np.ndarray, b2: np.ndarray) -> Callable[[float], np.ndarray]:
        ...


def axis_rule(name: str, center: float, spread: float, quad: QuadratureSpec) -> AxisRule:
    """
    Regla 1-D que cubre |centro| + box·max(1, √2·dispersión).
    Gauss-Hermite sin escalar (se agregan nodos hasta cubrir) o trapecio en la caja.
    """
    halfwidth = abs(center) + quad.box_halfwidth * max(1.0, math.sqrt(2.0) * spread)
    if quad.scheme == "gauss-hermite":
        n = quad.nodes_per_axis
        while largest_hermite_root(n) < halfwidth:
            n += 8
            if n > MAX_GH_NODES:
                raise ConfigError(
                    f"El eje '{name}' necesita más de {MAX_GH_NODES} nodos de Gauss-Hermite "
                    f"(semiancho {halfwidth:.2f}); use scheme='trapezoid'"
                )
        nodes, weights = gauss_hermite_plain(n)
        return AxisRule(name, nodes, weights, halfwidth)

    n = max(quad.nodes_per_axis, math.ceil(quad.nodes_per_axis * halfwidth / quad.box_halfwidth))
    nodes = np.linspace(-halfwidth, halfwidth, n)
    step = nodes[1] - nodes[0]
    weights = np.full(n, step)
    weights[0] = weights[-1] = step / 2
    return AxisRule(name, nodes, weights, halfwidth)


def phase_space_axes(evaluator: HusimiEvaluator, quad: QuadratureSpec) -> List[AxisRule]:
    return [
        axis_rule(name, center, spread, quad)
        for name, (center, spread) in zip(AXIS_NAMES, evaluator.axis_profile())
    ]


class HusimiIntegrals(NamedTuple):
    """Resultados de una pasada: momentos (log), Wehrl, marginales y bordes."""
    log_moments: Dict[float, float]
    wehrl: float
    phi1: np.ndarray
    phi2: np.ndarray
    axes: List[AxisRule]
    edges: Dict[str, float]


class _Chunk(NamedTuple):
    log_sums: Dict[float, float]
    entropy: float
    phi1_row: np.ndarray
    phi2_part: np.ndarray
    edges: Dict[str, float]


def _entropy_sum(weights: np.ndarray, values: np.ndarray) -> float:
    """Σ w f ln f con el convenio 0·ln 0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(values > TINY, weights * values * np.log(values), 0.0)
    return float(np.sum(terms))


def _log_weighted_sum(log_weights: np.ndarray, values: np.ndarray, nu: float) -> float:
    """log Σ w f^ν sin formar f^ν (evita el subdesbordamiento)."""
    with np.errstate(divide="ignore"):
        return float(logsumexp(nu * np.log(values) + log_weights))


def integrate_husimi(
    evaluator: HusimiEvaluator,
    quad: QuadratureSpec,
    nus: Sequence[float] = (),
    axes: Optional[List[AxisRule]] = None,
) -> HusimiIntegrals:
    """
    Una pasada sobre la rejilla 4-D. Devuelve log M_ν (incluye ν = 1 y 2),
    la entropía de Wehrl y las marginales Φ₁(α₁, β₁), Φ₂(α₂, β₂).
    """
    axes = axes or phase_space_axes(evaluator, quad)
    ax1, ax2, ax3, ax4 = axes
    nus = sorted(set(nus) | {1.0, 2.0})
    w234 = ax2.weights[:, None, None] * ax3.weights[None, :, None] * ax4.weights[None, None, :]
    log_w234 = np.log(w234)
    evaluate = evaluator.block_evaluator(ax2.nodes, ax3.nodes, ax4.nodes)
    last = len(ax1.nodes) - 1

    def run_chunk(i: int) -> _Chunk:
        block = evaluate(float(ax1.nodes[i]))
        w1 = float(ax1.weights[i])
        log_w = log_w234 + math.log(w1)
        log_sums = {nu: _log_weighted_sum(log_w, block, nu) for nu in nus}
        entropy = _entropy_sum(w1 * w234, block)
        phi1_row = np.einsum("j,jkl,l->k", ax2.weights, block, ax4.weights) / math.pi
        phi2_part = w1 * np.einsum("k,jkl->jl", ax3.weights, block) / math.pi
        edges = {
            "alpha1": float(block.max()) if i in (0, last) else 0.0,
            "alpha2": float(max(block[0].max(), block[-1].max())),
            "beta1": float(max(block[:, 0].max(), block[:, -1].max())),
            "beta2": float(max(block[:, :, 0].max(), block[:, :, -1].max())),
        }
        return _Chunk(log_sums, entropy, phi1_row, phi2_part, edges)

    indices = range(len(ax1.nodes))
    if quad.workers > 1:
        with ThreadPoolExecutor(max_workers=quad.workers) as pool:
            chunks = list(pool.map(run_chunk, indices))
    else:
        chunks = [run_chunk(i) for i in indices]

    log_moments = {
        nu: float(logsumexp([c.log_sums[nu] for c in chunks])) - 2 * LOG_PI for nu in nus
    }
    wehrl = -math.fsum(c.entropy for c in chunks) / math.pi ** 2
    phi1 = np.stack([c.phi1_row for c in chunks])
    phi2 = np.sum(np.stack([c.phi2_part for c in chunks]), axis=0)
    edges = {name: max(c.edges[name] for c in chunks) for name in AXIS_NAMES}
    shape = "x".join(str(len(a.nodes)) for a in axes)
    logger.debug(f"Rejilla {shape}: norma={math.exp(log_moments[1.0]):.12f}")
    return HusimiIntegrals(log_moments, wehrl, phi1, phi2, axes, edges)


def check_coverage(integrals: HusimiIntegrals, quad: QuadratureSpec) -> None:
    for name in AXIS_NAMES:
        if integrals.edges[name] > quad.edge_tol:
            raise QuadratureCoverageError(name, integrals.edges[name], quad.edge_tol)


def plane_measures(
    values: np.ndarray, first: AxisRule, second: AxisRule, nus: Sequence[float]
) -> Tuple[Dict[float, float], float]:
    """
    Momentos y entropía de una marginal 2-D con la medida d²/π.
    Devuelve ({ν: log M_ν}, W).
    """
    weights = first.weights[:, None] * second.weights[None, :]
    log_w = np.log(weights)
    log_moments = {nu: _log_weighted_sum(log_w, values, nu) - LOG_PI for nu in nus}
    wehrl = -_entropy_sum(weights, values) / math.pi
    return log_moments, wehrl
