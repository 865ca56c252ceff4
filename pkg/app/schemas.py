# app/schemas.py
import math
from typing import List, Literal, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.exceptions import DomainError
from app.utils import default_lambda_grid, moment_column
from app.validators import ChannelsValidator, LambdaGridValidator, NuListValidator

DEFAULT_NUS = [0.5, 1.5, 2.0, 3.0, 4.0]
REPORT_COLUMNS = ["channel", "lambda", "two_j", "n_cut", "norm", "P", "W", "P1", "P2", "W1", "W2"]


# --- Parámetros físicos ---
class DickeParams(BaseModel):
    """Parámetros de una corrida: fuente única de verdad."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    omega: float = Field(1.0, gt=0, allow_inf_nan=False, description="Frecuencia del campo ω")
    omega0: float = Field(1.0, gt=0, allow_inf_nan=False, description="Separación de niveles ω₀")
    lam: float = Field(0.0, ge=0, allow_inf_nan=False, alias="lambda", description="Acoplamiento λ")
    two_j: int = Field(..., ge=1, description="2j entero (admite j semientero)")
    n_cut: int = Field(40, ge=0, description="Corte de Fock n_c")

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def critical_coupling(self) -> float:
        return math.sqrt(self.omega * self.omega0) / 2

    @property
    def dimension(self) -> int:
        return (self.n_cut + 1) * (self.two_j + 1)

    def with_coupling(self, lam: float) -> "DickeParams":
        # model_copy no valida; se reconstruye
        return DickeParams(**{**self.model_dump(), "lam": lam})

    def with_cutoff(self, n_cut: int) -> "DickeParams":
        return DickeParams(**{**self.model_dump(), "n_cut": n_cut})


# --- Puntos y estados de la base ---
class BasisState(NamedTuple):
    n: int
    m_index: int  # j + m, en 0..2j


class PhasePointExact(NamedTuple):
    alpha: complex
    z: complex


class PhasePoint(NamedTuple):
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float

    @property
    def alpha(self) -> complex:
        return complex(self.alpha1, self.alpha2)

    @property
    def beta(self) -> complex:
        return complex(self.beta1, self.beta2)


# --- Estado fundamental ---
class GroundState(BaseModel):
    """Coeficientes c_{n,m_index} con energía y paridad."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: DickeParams
    coeffs: np.ndarray
    energy: float
    parity: int = 1
    residual: float = 0.0
    tol: float = 1e-10
    solver: str = "lanczos"

    @model_validator(mode="after")
    def check_invariants(self) -> "GroundState":
        expected = (self.params.n_cut + 1, self.params.two_j + 1)
        if self.coeffs.shape != expected:
            raise ValueError(f"coeffs con forma {self.coeffs.shape}, se esperaba {expected}")
        norm = float(np.sum(self.coeffs ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"Estado no normalizado: Σc² = {norm!r}")
        n, k = np.indices(expected)
        odd = (n + k) % 2 == 1
        if self.parity == 1 and np.any(self.coeffs[odd] != 0.0):
            raise ValueError("Coeficientes no nulos en sectores de paridad impar")
        self.coeffs.setflags(write=False)
        return self


class ConvergenceStep(BaseModel):
    n_cut: int
    energy: float
    delta_energy: float
    leakage: float
    converged: bool = False


# --- Cuadratura ---
class QuadratureSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: Literal["gauss-hermite", "trapezoid"] = "gauss-hermite"
    nodes_per_axis: int = Field(48, ge=8, description="Nodos mínimos por eje")
    box_halfwidth: float = Field(6.0, gt=0, description="Margen alrededor de los centros de paquete")
    target_tol: float = Field(1e-6, gt=0, description="Tolerancia de la norma y de la convergencia")
    edge_tol: float = Field(1e-10, gt=0, description="Umbral de masa en el borde")
    workers: int = Field(1, ge=1, description="Hilos para los bloques de nodos")

    def doubled(self) -> "QuadratureSpec":
        return self.model_copy(update={"nodes_per_axis": 2 * self.nodes_per_axis})


# --- Reportes de medidas ---
def measure_orders(nus: Sequence[float]) -> List[float]:
    """Órdenes ν ordenados, sin duplicados y con ν = 2 siempre presente."""
    for nu in nus:
        if not math.isfinite(nu) or nu <= 0:
            raise DomainError(f"ν={nu} inválido: debe ser positivo y finito")
    return sorted(set(nus) | {2.0})


class RenyiEntry(BaseModel):
    nu: float
    moment: float
    entropy: float

    @classmethod
    def from_log_moment(cls, nu: float, log_moment: float, wehrl: float) -> "RenyiEntry":
        """W_ν = ln M_ν / (1 − ν); en ν = 1 se toma el límite, la entropía de Wehrl."""
        entropy = wehrl if nu == 1 else log_moment / (1 - nu)
        return cls(nu=nu, moment=math.exp(log_moment), entropy=entropy)


class MeasureReport(BaseModel):
    """Una fila λ-canal con todas las medidas."""
    model_config = ConfigDict(populate_by_name=True)

    channel: Literal["numeric", "variational"]
    lam: float = Field(..., alias="lambda")
    two_j: int
    n_cut: int
    norm: float
    P: float
    W: float
    renyi: List[RenyiEntry] = []
    P1: float
    P2: float
    W1: float
    W2: float
    marginal1: List[RenyiEntry] = []
    marginal2: List[RenyiEntry] = []

    @model_validator(mode="after")
    def check_measures(self) -> "MeasureReport":
        moments = [self.P, self.P1, self.P2] + [e.moment for e in self.renyi + self.marginal1 + self.marginal2]
        if any(not (m > 0) for m in moments):
            raise ValueError("Todos los momentos M_ν deben ser positivos")
        entropies = [self.W, self.W1, self.W2] + [e.entropy for e in self.renyi]
        if any(not math.isfinite(w) for w in entropies):
            raise ValueError("Entropías no finitas en el reporte")
        return self

    def moment(self, nu: float) -> float:
        for entry in self.renyi:
            if entry.nu == nu:
                return entry.moment
        raise KeyError(f"ν={nu} no calculado")

    def row(self, nus: List[float]) -> dict:
        """Fila plana con la cabecera fija de la tabla de barrido."""
        data = {
            "channel": self.channel, "lambda": self.lam, "two_j": self.two_j,
            "n_cut": self.n_cut, "norm": self.norm, "P": self.P, "W": self.W,
            "P1": self.P1, "P2": self.P2, "W1": self.W1, "W2": self.W2,
        }
        for nu in nus:
            data[moment_column(nu)] = self.moment(nu)
        return data


# --- Canal variacional ---
class EquilibriumConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha_e: float
    z_e: float
    beta_e: float
    phase: Literal["normal", "superradiant"]

    @model_validator(mode="after")
    def check_branch(self) -> "EquilibriumConfig":
        if self.phase == "normal" and (self.alpha_e, self.z_e, self.beta_e) != (0.0, 0.0, 0.0):
            raise ValueError("En la fase normal el equilibrio es el origen")
        if self.phase == "superradiant" and not (self.alpha_e <= 0 and 0 <= self.z_e < 1):
            raise ValueError("Rama superradiante: se requiere α_e ≤ 0 y 0 ≤ z_e < 1")
        return self

    @property
    def displacement(self) -> float:
        """D = α_e² + β_e², exponente de la superposición entre paquetes."""
        return self.alpha_e ** 2 + self.beta_e ** 2


class AnsatzState(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: DickeParams
    eq: EquilibriumConfig
    parity_branch: Literal["+", "-"] = "+"

    @model_validator(mode="after")
    def check_normalization(self) -> "AnsatzState":
        overlap = math.exp(-2 * self.eq.alpha_e ** 2) * (
            (1 - self.eq.z_e ** 2) / (1 + self.eq.z_e ** 2)
        ) ** self.params.two_j
        sign = 1 if self.parity_branch == "+" else -1
        if not 1 + sign * overlap > 0:
            raise ValueError("Factor de normalización 𝒩 nulo para esta rama")
        return self

    @property
    def sign(self) -> int:
        return 1 if self.parity_branch == "+" else -1


class ZeroLine(BaseModel):
    """Recta de ceros de Φ₊ recortada a una celda."""
    space: Literal["position", "momentum"]
    slope: float
    intercept: float
    fringe_index: Optional[int] = None
    segment: List[float] = Field(..., min_length=4, max_length=4, description="a_lo, b_lo, a_hi, b_hi")


# --- Suavizado gaussiano ---
class SmearingConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma2: float = Field(..., gt=0, description="Varianza natural σ² = 1/(2ω)")
    omega: float = Field(..., gt=0)
    requires_resonance: bool = True

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


# --- Configuración del barrido ---
class SweepConfig(LambdaGridValidator, ChannelsValidator, NuListValidator, BaseModel):
    """Documento JSON de configuración; cada flag del CLI lo sobrescribe."""
    omega: float = Field(1.0, gt=0)
    omega0: float = Field(1.0, gt=0)
    two_j: int = Field(20, ge=1)
    n_cut: Optional[int] = Field(None, ge=0, description="None: se elige por convergencia")
    lambda_grid: List[float] = Field(default_factory=default_lambda_grid)
    channels: List[str] = Field(default_factory=lambda: ["numeric", "variational"])
    nu_list: List[float] = Field(default_factory=lambda: list(DEFAULT_NUS))
    quad: QuadratureSpec = Field(default_factory=QuadratureSpec)
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    cache_dir: Optional[str] = None
    workers: int = Field(1, ge=1)
    eigen_tol: float = Field(1e-10, gt=0)
    energy_tol: float = Field(1e-8, gt=0)
    n_cut_max: int = Field(300, ge=0)
    db_url: Optional[str] = None

    def params_for(self, lam: float, n_cut: int = 0) -> DickeParams:
        return DickeParams(omega=self.omega, omega0=self.omega0, lam=lam, two_j=self.two_j, n_cut=n_cut)

    @property
    def critical_coupling(self) -> float:
        return math.sqrt(self.omega * self.omega0) / 2
