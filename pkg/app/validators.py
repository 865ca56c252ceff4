# app/validators.py
import math
from typing import List

from pydantic import field_validator

from app.utils import is_strictly_increasing

KNOWN_CHANNELS = ("numeric", "variational")


class LambdaGridValidator:
    """Mixin para validar la rejilla de acoplamientos."""

    @field_validator('lambda_grid')
    @classmethod
    def validate_lambda_grid(cls, v: List[float]) -> List[float]:
        """La rejilla debe ser no vacía, finita, no negativa y estrictamente creciente."""
        if not v:
            raise ValueError('La rejilla de λ no puede estar vacía')
        if any(not math.isfinite(x) or x < 0 for x in v):
            raise ValueError('Los valores de λ deben ser finitos y no negativos')
        if not is_strictly_increasing(v):
            raise ValueError('La rejilla de λ debe ser estrictamente creciente')
        return v


class ChannelsValidator:
    """Mixin para validar los canales pedidos."""

    @field_validator('channels')
    @classmethod
    def validate_channels(cls, v: List[str]) -> List[str]:
        if not v:
            raise ValueError('Debe pedirse al menos un canal')
        unknown = [c for c in v if c not in KNOWN_CHANNELS]
        if unknown:
            raise ValueError(f'Canales desconocidos: {unknown}; use {KNOWN_CHANNELS}')
        # Orden canónico y sin duplicados
        return [c for c in KNOWN_CHANNELS if c in v]


class NuListValidator:
    """Mixin para validar los órdenes ν de los momentos."""

    @field_validator('nu_list')
    @classmethod
    def validate_nu_list(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError('La lista de ν no puede estar vacía')
        for nu in v:
            if not math.isfinite(nu) or nu <= 0:
                raise ValueError(f'ν={nu} inválido: debe ser positivo')
            if nu == 1:
                raise ValueError('ν=1 es la norma; la entropía de Wehrl se reporta aparte')
        return sorted(set(v))
