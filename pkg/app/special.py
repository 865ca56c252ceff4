# app/special.py
"""
Funciones especiales estables: factoriales logarítmicos, funciones de Hermite
normalizadas por recurrencia, amplitudes de estados coherentes en forma
(log-magnitud, fase) y reglas de Gauss-Hermite con pesos de medida plana.
"""
import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import gammaln, roots_hermite

from app.exceptions import HermiteDegreeError

# Grado máximo de la recurrencia normalizada (no desborda, sólo limita memoria)
MAX_HERMITE_DEGREE = 5000
PI_QUARTER = math.pi ** -0.25


def log_factorial(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def log_binomial(n, k):
    return log_factorial(n) - log_factorial(k) - log_factorial(np.asarray(n) - np.asarray(k))


def hermite_functions(n_max: int, u) -> np.ndarray:
    """
    Funciones de Hermite normalizadas h_0..h_{n_max} evaluadas en u.

    h_n(u) = H_n(u) e^{-u²/2} / sqrt(2^n n! sqrt(π)), por la recurrencia
    h_{n+1} = sqrt(2/(n+1)) u h_n - sqrt(n/(n+1)) h_{n-1}.
    Devuelve un arreglo de forma (n_max + 1, *u.shape).
    """
    if n_max < 0:
        raise ValueError("n_max debe ser no negativo")
    if n_max > MAX_HERMITE_DEGREE:
        raise HermiteDegreeError(n_max, MAX_HERMITE_DEGREE)
    u = np.asarray(u, dtype=float)
    out = np.empty((n_max + 1,) + u.shape)
    out[0] = PI_QUARTER * np.exp(-0.5 * u ** 2)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * u * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * u * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def glauber_amplitudes(n_max: int, alpha) -> np.ndarray:
    """
    Amplitudes ⟨n|α⟩ = e^{-|α|²/2} αⁿ / sqrt(n!) para n = 0..n_max.
    Forma (n_max + 1, *alpha.shape); se construyen como exp(log|a|) · e^{i n arg α}.
    """
    alpha = np.asarray(alpha, dtype=complex)
    n = np.arange(n_max + 1, dtype=float).reshape((-1,) + (1,) * alpha.ndim)
    radius = np.abs(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_r = np.log(radius)
        powers = np.where(n == 0, 0.0, n * log_r)
    log_mag = -0.5 * radius ** 2 + powers - 0.5 * gammaln(n + 1.0)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def spin_amplitudes(two_j: int, z) -> np.ndarray:
    """
    Amplitudes ⟨j,m|z⟩ = (1+|z|²)^{-j} sqrt(C(2j, k)) z^k, k = j + m = 0..2j.
    Binomiales vía log-Gamma.
    """
    z = np.asarray(z, dtype=complex)
    k = np.arange(two_j + 1, dtype=float).reshape((-1,) + (1,) * z.ndim)
    radius = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_r = np.log(radius)
        powers = np.where(k == 0, 0.0, k * log_r)
    log_mag = -0.5 * two_j * np.log1p(radius ** 2) + 0.5 * log_binomial(two_j, k) + powers
    return np.exp(log_mag) * np.exp(1j * k * np.angle(z))


@lru_cache(maxsize=64)
def gauss_hermite_plain(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Regla de Gauss-Hermite para la medida plana: ∫ f(t) dt ≈ Σ W_i f(τ_i),
    con W_i = w_i e^{τ_i²} = 1 / (n h_{n-1}(τ_i)²). Evita el desborde de e^{τ²}.
    """
    nodes, _ = roots_hermite(n)
    h = hermite_functions(n - 1, nodes)[n - 1]
    weights = 1.0 / (n * h ** 2)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def largest_hermite_root(n: int) -> float:
    return float(gauss_hermite_plain(n)[0][-1])
