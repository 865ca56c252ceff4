# app/ground_state.py
import logging
import math
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np

from app.eigensolver import solve_lowest
from app.exceptions import ConvergenceError
from app.hamiltonian import assemble_hamiltonian, even_block_indices
from app.schemas import ConvergenceStep, DickeParams, GroundState
from app.special import hermite_functions

logger = logging.getLogger(__name__)

CUTOFF_STEP = 10


def ground_state(params: DickeParams, tol: float = 1e-10) -> GroundState:
    """
    Estado fundamental en el bloque de paridad par.
    Signo global: la componente de mayor |c| queda positiva.
    """
    H = assemble_hamiltonian(params)
    even = even_block_indices(params)
    block = H[even][:, even]
    result = solve_lowest(block, tol=tol)

    vector = np.zeros(params.dimension)
    vector[even] = result.vector
    vector /= np.linalg.norm(vector)
    if vector[np.argmax(np.abs(vector))] < 0:
        vector = -vector
    energy = float(vector @ (H @ vector))

    return GroundState(
        params=params,
        coeffs=vector.reshape(params.n_cut + 1, params.two_j + 1),
        energy=energy,
        parity=1,
        residual=result.residual,
        tol=tol,
        solver=result.method,
    )


def convergence_study(
    params_base: DickeParams,
    energy_tol: float = 1e-8,
    n_cut_max: int = 300,
    step: int = CUTOFF_STEP,
    tol: float = 1e-10,
    solve: Optional[Callable[[DickeParams], GroundState]] = None,
) -> Tuple[List[ConvergenceStep], GroundState]:
    """
    Recorre n_c = 0, step, 2·step, ... comparando con n_c + step.
    La fuga es el peso del estado refinado más allá de n_c.
    `solve` permite pasar por la caché de estados.
    """
    solve = solve or (lambda p: ground_state(p, tol=tol))
    if energy_tol <= 0:
        raise ValueError("energy_tol debe ser positivo")
    steps: List[ConvergenceStep] = []
    n_cut = 0
    current = solve(params_base.with_cutoff(0))
    while n_cut + step <= n_cut_max:
        refined = solve(params_base.with_cutoff(n_cut + step))
        delta = abs(current.energy - refined.energy)
        leakage = float(np.sum(refined.coeffs[n_cut + 1:, :] ** 2))
        converged = delta < energy_tol and leakage < energy_tol
        steps.append(ConvergenceStep(
            n_cut=n_cut, energy=current.energy, delta_energy=delta,
            leakage=leakage, converged=converged,
        ))
        logger.debug(f"n_c={n_cut}: E₀={current.energy:.12f} ΔE={delta:.2e} fuga={leakage:.2e}")
        if converged:
            return steps, current
        current = refined
        n_cut += step
    raise ConvergenceError(n_cut_max, steps)


def converge_cutoff(
    params_base: DickeParams,
    energy_tol: float = 1e-8,
    n_cut_max: int = 300,
    tol: float = 1e-10,
    solve: Optional[Callable[[DickeParams], GroundState]] = None,
) -> Tuple[int, GroundState]:
    steps, gs = convergence_study(
        params_base, energy_tol=energy_tol, n_cut_max=n_cut_max, tol=tol, solve=solve
    )
    logger.info(f"✓ Corte convergido: n_c={gs.params.n_cut} (λ={params_base.lam})")
    return gs.params.n_cut, gs


def numeric_wavefunction(gs: GroundState, space: Literal["position", "momentum"], x, y):
    """
    ψ(x, y) = (ωω₀)^{1/4} Σ c_{nk} h_n(√ω x) h_k(√ω₀ y) en posición;
    en momento ψ̃ = (ωω₀)^{-1/4} Σ (-i)^{n+k} c_{nk} h_n(p_x/√ω) h_k(p_y/√ω₀).
    """
    p = gs.params
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    C = gs.coeffs
    if space == "position":
        hx = hermite_functions(p.n_cut, math.sqrt(p.omega) * x)
        hy = hermite_functions(p.two_j, math.sqrt(p.omega0) * y)
        prefactor = (p.omega * p.omega0) ** 0.25
    elif space == "momentum":
        n = np.arange(p.n_cut + 1)[:, None]
        k = np.arange(p.two_j + 1)[None, :]
        C = C * (-1j) ** (n + k)
        hx = hermite_functions(p.n_cut, x / math.sqrt(p.omega))
        hy = hermite_functions(p.two_j, y / math.sqrt(p.omega0))
        prefactor = (p.omega * p.omega0) ** -0.25
    else:
        raise ValueError(f"Espacio '{space}' desconocido; use position o momentum")
    value = prefactor * np.einsum("n...,nk,k...->...", hx, C, hy)
    return value if value.ndim else value[()]
