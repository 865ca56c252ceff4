# app/exceptions.py
from typing import List, Optional, Sequence

# Códigos de salida del CLI
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_PARTIAL = 4


class DickeError(Exception):
    """Excepción base del paquete: mensaje legible y código de salida asociado."""
    exit_code = EXIT_NUMERIC

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(DickeError):
    """Excepción para configuraciones inválidas (archivo JSON, flags, rejillas)."""
    exit_code = EXIT_CONFIG


class DimensionOverflowError(DickeError):
    """Excepción cuando la base truncada supera el tope configurado."""
    exit_code = EXIT_CONFIG

    def __init__(self, dimension: int, cap: int):
        super().__init__(
            f"La dimensión {dimension} supera el máximo permitido ({cap}). "
            "Reduzca n_cut o ajuste DICKE_MAX_DIMENSION"
        )
        self.dimension = dimension
        self.cap = cap


class DomainError(DickeError, ValueError):
    """Excepción para evaluaciones fuera del dominio (p. ej. 𝒩₋ = 0)."""
    exit_code = EXIT_CONFIG


class ResonanceError(DickeError):
    """Excepción cuando el canal de suavizado se pide fuera de resonancia."""
    exit_code = EXIT_CONFIG

    def __init__(self, omega: float, omega0: float):
        super().__init__(
            f"El suavizado gaussiano requiere resonancia ω = ω₀ (ω={omega}, ω₀={omega0})"
        )
        self.omega = omega
        self.omega0 = omega0


class EigensolverError(DickeError):
    """Excepción cuando Lanczos no converge; conserva el diagnóstico de iteraciones."""

    def __init__(self, iterations: int, residuals: Sequence[float], dimension: int):
        trend = ", ".join(f"{r:.2e}" for r in list(residuals)[-5:])
        super().__init__(
            f"Lanczos no convergió tras {iterations} iteraciones "
            f"(dimensión {dimension}; últimos residuos: {trend})"
        )
        self.iterations = iterations
        self.residuals = list(residuals)
        self.dimension = dimension


class ConvergenceError(DickeError):
    """Excepción cuando n_cut_max se alcanza sin convergencia del corte de Fock."""

    def __init__(self, n_cut_max: int, steps: Optional[List] = None):
        steps = steps or []
        trend = ", ".join(f"ΔE={s.delta_energy:.2e}" for s in steps[-3:])
        super().__init__(
            f"No hay convergencia en el corte de Fock hasta n_c={n_cut_max} ({trend})"
        )
        self.n_cut_max = n_cut_max
        self.steps = steps


class QuadratureCoverageError(DickeError):
    """Excepción cuando la distribución tiene masa apreciable en el borde de la caja."""

    def __init__(self, axis: str, edge_value: float, threshold: float):
        super().__init__(
            f"Cobertura insuficiente en el eje '{axis}': Φ={edge_value:.3e} en el borde "
            f"(umbral {threshold:.1e}). Aumente box_halfwidth"
        )
        self.axis = axis
        self.edge_value = edge_value


class NormalizationError(DickeError):
    """Excepción cuando la norma integrada se aleja de 1 más de la tolerancia."""

    def __init__(self, norm: float, tol: float, cause: str = "nodos"):
        hint = (
            "aumente nodes_per_axis" if cause == "nodos" else "aumente box_halfwidth"
        )
        super().__init__(
            f"Norma {norm:.12f} fuera de tolerancia {tol:.1e}: {cause} insuficientes, {hint}"
        )
        self.norm = norm
        self.tol = tol
        self.cause = cause


class HermiteDegreeError(DickeError):
    """Excepción cuando el grado de Hermite excede el rango estable de la evaluación directa."""

    def __init__(self, degree: int, limit: int):
        super().__init__(
            f"Grado de Hermite {degree} por encima del rango estable ({limit}); "
            "use la evaluación en espacio logarítmico (log_space=True)"
        )
        self.degree = degree
        self.limit = limit


class NumericalInstabilityError(DickeError):
    """Excepción cuando una densidad intrínsecamente positiva resulta negativa."""

    def __init__(self, what: str, value: float):
        super().__init__(f"Inestabilidad numérica en {what}: valor {value:.3e} < 0")
        self.value = value
