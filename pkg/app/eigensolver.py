# app/eigensolver.py
import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import linalg, sparse

from app.config import get_dense_max
from app.exceptions import EigensolverError

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 600


class EigenResult(NamedTuple):
    energy: float
    vector: np.ndarray
    iterations: int
    residual: float
    method: str


def matrix_scale(H) -> float:
    """Cota de ‖H‖ (máxima suma absoluta por fila), al menos 1."""
    if sparse.issparse(H):
        row_sums = np.asarray(abs(H).sum(axis=1)).ravel()
    else:
        row_sums = np.abs(np.asarray(H)).sum(axis=1)
    return max(1.0, float(row_sums.max()) if row_sums.size else 1.0)


def _finish(H, vector: np.ndarray) -> Tuple[float, np.ndarray, float]:
    vector = vector / np.linalg.norm(vector)
    Hv = H @ vector
    energy = float(vector @ Hv)
    residual = float(np.linalg.norm(Hv - energy * vector))
    return energy, vector, residual


def dense_lowest(H) -> EigenResult:
    """Autopar más bajo por diagonalización densa (LAPACK, tridiagonalización de Householder)."""
    dense = H.toarray() if sparse.issparse(H) else np.asarray(H, dtype=float)
    values, vectors = linalg.eigh(dense, subset_by_index=[0, 0])
    energy, vector, residual = _finish(dense, vectors[:, 0])
    return EigenResult(energy, vector, 1, residual, "dense")


def lanczos_lowest(H, tol: float = 1e-10, max_iter: Optional[int] = None, seed: int = 0) -> EigenResult:
    """
    Lanczos con reortogonalización completa y vector inicial con semilla fija.
    Converge cuando la estimación de residuo β_k |s_k| cae bajo tol · ‖H‖.
    """
    dim = H.shape[0]
    if dim == 1:
        return dense_lowest(H)
    max_iter = min(dim, max_iter or DEFAULT_MAX_ITER)
    scale = matrix_scale(H)
    rng = np.random.default_rng(seed)

    q = rng.standard_normal(dim)
    q /= np.linalg.norm(q)
    basis = np.zeros((dim, max_iter))
    alphas, betas, history = [], [], []
    beta_prev = 0.0

    for k in range(max_iter):
        basis[:, k] = q
        w = H @ q
        alpha = float(q @ w)
        w = w - alpha * q
        if k > 0:
            w -= beta_prev * basis[:, k - 1]
        # Reortogonalización completa (dos pasadas)
        Q = basis[:, : k + 1]
        w -= Q @ (Q.T @ w)
        w -= Q @ (Q.T @ w)
        beta = float(np.linalg.norm(w))
        alphas.append(alpha)

        if k == 0:
            theta, s = np.array([alpha]), np.ones((1, 1))
        else:
            theta, s = linalg.eigh_tridiagonal(
                np.array(alphas), np.array(betas), select="i", select_range=(0, 0)
            )
        estimate = beta * abs(s[-1, 0])
        history.append(estimate)

        exhausted = beta <= 1e-14 * scale or k + 1 == dim
        if estimate <= tol * scale or exhausted:
            energy, vector, residual = _finish(H, Q @ s[:, 0])
            if residual <= tol * scale or exhausted:
                logger.debug(f"Lanczos convergió en {k + 1} iteraciones (residuo {residual:.2e})")
                return EigenResult(energy, vector, k + 1, residual, "lanczos")

        betas.append(beta)
        beta_prev = beta
        q = w / beta

    raise EigensolverError(max_iter, history, dim)


def solve_lowest(H, tol: float = 1e-10, max_iter: Optional[int] = None) -> EigenResult:
    """Lanczos primero; si falla y la dimensión lo permite, respaldo denso."""
    try:
        return lanczos_lowest(H, tol=tol, max_iter=max_iter)
    except EigensolverError as e:
        if H.shape[0] > get_dense_max():
            raise
        logger.warning(f"⚠️ {e.detail}; se usa la diagonalización densa")
        return dense_lowest(H)


def lowest_eigenpair(H, tol: float = 1e-10) -> Tuple[float, np.ndarray]:
    result = solve_lowest(H, tol=tol)
    return result.energy, result.vector
