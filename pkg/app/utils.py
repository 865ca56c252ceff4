# app/utils.py
import math
from typing import List, Tuple

GRID_DECIMALS = 12


def format_decimal(value: float) -> str:
    """
    Representación decimal exacta (ida y vuelta) de un float.
    Se usa como clave de caché: 0.1 -> "0.1", 1e-05 -> "1e-05".
    """
    return repr(float(value))


def frange(lo: float, hi: float, step: float) -> List[float]:
    """
    Rango cerrado [lo, hi] con paso fijo, redondeado para que los
    valores sean estables como claves (0.30000000000000004 -> 0.3).
    """
    if step <= 0:
        raise ValueError("El paso debe ser positivo")
    if hi < lo:
        raise ValueError(f"Rango vacío: {lo} > {hi}")
    count = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, GRID_DECIMALS) for i in range(count + 1)]


def default_lambda_grid() -> List[float]:
    """Rejilla para reproducir las curvas: 0..1 paso 0.02, refinada a 0.005 en [0.4, 0.6]."""
    coarse = frange(0.0, 1.0, 0.02)
    fine = frange(0.4, 0.6, 0.005)
    return sorted(set(coarse) | set(fine))


def parse_lambda_grid(text: str) -> List[float]:
    """
    Interpreta una rejilla de λ.
    Acepta "lo:hi:step" (extremos incluidos) o una lista "0,0.1,0.2".
    """
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"Rejilla '{text}' inválida; use lo:hi:step")
        lo, hi, step = (float(p) for p in parts)
        return frange(lo, hi, step)
    return [round(float(p), GRID_DECIMALS) for p in text.split(",") if p.strip()]


def parse_float_list(text: str) -> List[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def parse_cell(text: str) -> Tuple[float, float, float, float]:
    """Celda "a_lo,a_hi,b_lo,b_hi"."""
    values = parse_float_list(text)
    if len(values) != 4:
        raise ValueError(f"La celda '{text}' necesita 4 valores: a_lo,a_hi,b_lo,b_hi")
    a_lo, a_hi, b_lo, b_hi = values
    if a_hi <= a_lo or b_hi <= b_lo:
        raise ValueError(f"Celda degenerada: {text}")
    return a_lo, a_hi, b_lo, b_hi


def is_strictly_increasing(values: List[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


def moment_column(nu: float) -> str:
    """Nombre de columna de un momento: 2.0 -> "M_2", 0.5 -> "M_0.5"."""
    return f"M_{nu:g}"


def near_critical(lam: float, critical: float, window: float = 0.05) -> bool:
    """Ventana |λ − λc| < window·λc excluida de las tolerancias de aceptación."""
    return abs(lam - critical) < window * critical
