# app/hamiltonian.py
import logging
import math
from typing import Iterator, List, Optional

import numpy as np
from scipy import sparse

from app.config import get_max_dimension
from app.exceptions import DimensionOverflowError
from app.schemas import BasisState, DickeParams

logger = logging.getLogger(__name__)


def critical_coupling(params: DickeParams) -> float:
    """λ_c = sqrt(ω ω₀) / 2."""
    return math.sqrt(params.omega * params.omega0) / 2


class Basis:
    """
    Base truncada {|n; j, m⟩} en orden lexicográfico (n, luego m_index).
    Índice plano i = n (2j+1) + m_index.
    """

    def __init__(self, params: DickeParams):
        self.n_cut = params.n_cut
        self.two_j = params.two_j
        self.width = params.two_j + 1

    def __len__(self) -> int:
        return (self.n_cut + 1) * self.width

    def __iter__(self) -> Iterator[BasisState]:
        for n in range(self.n_cut + 1):
            for m_index in range(self.width):
                yield BasisState(n, m_index)

    def __getitem__(self, index: int) -> BasisState:
        if not 0 <= index < len(self):
            raise IndexError(f"Índice {index} fuera de la base de tamaño {len(self)}")
        return BasisState(*divmod(index, self.width))

    def index(self, state: BasisState) -> int:
        self.check(state)
        return state.n * self.width + state.m_index

    def check(self, state: BasisState) -> None:
        if not (0 <= state.n <= self.n_cut and 0 <= state.m_index <= self.two_j):
            raise IndexError(
                f"Estado {tuple(state)} fuera de la base (n_c={self.n_cut}, 2j={self.two_j})"
            )

    @property
    def states(self) -> List[BasisState]:
        return list(self)


def build_basis(params: DickeParams) -> Basis:
    return Basis(params)


def parity_sign(n: int, m_index: int) -> int:
    """Autovalor de e^{iπ(n + m + j)}: +1 si n + m_index es par."""
    return 1 if (n + m_index) % 2 == 0 else -1


def parity_signs(params: DickeParams) -> np.ndarray:
    index = np.arange(params.dimension)
    n, k = np.divmod(index, params.two_j + 1)
    return np.where((n + k) % 2 == 0, 1, -1)


def even_block_indices(params: DickeParams) -> np.ndarray:
    return np.flatnonzero(parity_signs(params) == 1)


def matrix_element(bra: BasisState, ket: BasisState, params: DickeParams) -> float:
    """⟨n'; j, m'|H|n; j, m⟩ elemento a elemento."""
    basis = Basis(params)
    basis.check(bra)
    basis.check(ket)
    two_j = params.two_j
    if bra == ket:
        m = ket.m_index - two_j / 2
        return ket.n * params.omega + m * params.omega0
    dn = bra.n - ket.n
    dk = bra.m_index - ket.m_index
    if abs(dn) != 1 or abs(dk) != 1:
        return 0.0
    photon = math.sqrt(max(bra.n, ket.n))
    k = ket.m_index
    # j(j+1) - m(m±1) en términos de k = j + m
    spin = (two_j - k) * (k + 1) if dk == 1 else k * (two_j - k + 1)
    return params.lam / math.sqrt(two_j) * photon * math.sqrt(spin)


def assemble_hamiltonian(params: DickeParams, max_dimension: Optional[int] = None) -> sparse.csr_matrix:
    """Hamiltoniano de Dicke truncado, real simétrico, a lo sumo 5 no nulos por fila."""
    cap = max_dimension if max_dimension is not None else get_max_dimension()
    dim = params.dimension
    if dim > cap:
        raise DimensionOverflowError(dim, cap)

    two_j = params.two_j
    index = np.arange(dim)
    n, k = np.divmod(index, two_j + 1)
    diagonal = n * params.omega + (k - two_j / 2) * params.omega0

    rows, cols, values = [index], [index], [diagonal]
    if params.lam != 0 and params.n_cut > 0:
        scale = params.lam / math.sqrt(two_j)
        src = n < params.n_cut
        # a† J₊ y a† J₋; los términos a J∓ son sus transpuestos
        for dk, spin in ((1, (two_j - k) * (k + 1)), (-1, k * (two_j - k + 1))):
            mask = src & (spin > 0)
            i = index[mask]
            target = i + (two_j + 1) + dk
            value = scale * np.sqrt(n[mask] + 1.0) * np.sqrt(spin[mask].astype(float))
            rows += [target, i]
            cols += [i, target]
            values += [value, value]

    matrix = sparse.coo_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    matrix.eliminate_zeros()
    logger.debug(f"Hamiltoniano ensamblado: dim={dim}, nnz={matrix.nnz}")
    return matrix


def parity_operator(params: DickeParams) -> sparse.dia_matrix:
    return sparse.diags(parity_signs(params).astype(float))
