# app/zeros.py
import logging
import math
from typing import List, Literal, Optional, Tuple

from app.schemas import DickeParams, ZeroLine
from app.variational import equilibrium

logger = logging.getLogger(__name__)

Cell = Tuple[float, float, float, float]


def clip_line(slope: float, intercept: float, cell: Cell) -> Optional[List[float]]:
    """
    Segmento de a = slope·b + intercept dentro de la celda cerrada
    [a_lo, a_hi] × [b_lo, b_hi]; None si la longitud no es positiva.
    """
    a_lo, a_hi, b_lo, b_hi = cell
    if slope == 0:
        if not a_lo <= intercept <= a_hi:
            return None
        start, end = b_lo, b_hi
    else:
        first = (a_lo - intercept) / slope
        second = (a_hi - intercept) / slope
        start = max(b_lo, min(first, second))
        end = min(b_hi, max(first, second))
    if end <= start:
        return None
    return [slope * start + intercept, start, slope * end + intercept, end]


def husimi_zero_lines(
    params: DickeParams, cell: Cell, space: Literal["position", "momentum"] = "momentum"
) -> List[ZeroLine]:
    """
    Rectas de ceros de Φ₊ ("franjas oscuras").
    Posición: α₁ = −(β_e/α_e) β₁. Momento: α₂ = −(β_e/α_e) β₂ − π(2l+1)/(2α_e).
    """
    eq = equilibrium(params)
    if eq.phase == "normal" or eq.alpha_e == 0:
        # Sin ceros: Φ₊ es estrictamente positiva
        return []
    slope = -eq.beta_e / eq.alpha_e

    if space == "position":
        segment = clip_line(slope, 0.0, cell)
        if segment is None:
            return []
        return [ZeroLine(space="position", slope=slope, intercept=0.0, segment=segment)]

    a_lo, a_hi, b_lo, b_hi = cell
    # Rango de interceptos que pueden tocar la celda
    reach = (min(slope * b_lo, slope * b_hi), max(slope * b_lo, slope * b_hi))
    low, high = a_lo - reach[1], a_hi - reach[0]
    spacing = math.pi / abs(eq.alpha_e)
    first = -math.pi / (2 * eq.alpha_e)
    bounds = sorted(((low - first) / spacing, (high - first) / spacing))
    lines = []
    for l in range(math.floor(bounds[0]) - 1, math.ceil(bounds[1]) + 2):
        intercept = -math.pi * (2 * l + 1) / (2 * eq.alpha_e)
        segment = clip_line(slope, intercept, cell)
        if segment is not None:
            lines.append(ZeroLine(
                space="momentum", slope=slope, intercept=intercept,
                fringe_index=l, segment=segment,
            ))
    logger.debug(f"λ={params.lam}, 2j={params.two_j}: {len(lines)} franjas en la celda {cell}")
    return sorted(lines, key=lambda line: line.fringe_index)
