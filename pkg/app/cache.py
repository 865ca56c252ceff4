# app/cache.py
"""
Caché de estados fundamentales en disco: un JSON por clave (ω, ω₀, λ, 2j, n_c).

La clave usa la representación decimal exacta de cada parámetro y los
coeficientes se guardan con 17 cifras significativas (ida y vuelta exacta).
La escritura es atómica (archivo temporal + os.replace); con claves idénticas
gana el último escritor.
"""
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from app.config import CACHE_FORMAT_VERSION, get_cache_dir
from app.ground_state import ground_state
from app.schemas import DickeParams, GroundState
from app.utils import format_decimal

logger = logging.getLogger(__name__)


def cache_key(params: DickeParams) -> str:
    return (
        f"omega={format_decimal(params.omega)}_omega0={format_decimal(params.omega0)}"
        f"_lambda={format_decimal(params.lam)}_twoj={params.two_j}_ncut={params.n_cut}"
    )


def cache_path(params: DickeParams, cache_dir: Optional[str] = None) -> Path:
    return get_cache_dir(cache_dir) / f"{cache_key(params)}.json"


def save_ground_state(gs: GroundState, cache_dir: Optional[str] = None) -> Path:
    path = cache_path(gs.params, cache_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        "version": CACHE_FORMAT_VERSION,
        "params": gs.params.model_dump(by_alias=True),
        "energy": repr(gs.energy),
        "parity": gs.parity,
        "residual": repr(gs.residual),
        "tol": repr(gs.tol),
        "solver": gs.solver,
        "shape": list(gs.coeffs.shape),
        # Orden por filas (n, m_index)
        "coeffs": ["%.17e" % c for c in gs.coeffs.ravel()],
    }
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(document, handle)
        os.replace(tmp_name, path)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Estado guardado en caché: {path.name}")
    return path


def load_ground_state(params: DickeParams, cache_dir: Optional[str] = None, tol: Optional[float] = None) -> Optional[GroundState]:
    """
    Estado en caché para `params`, o None si no existe, es de otra versión o
    fue resuelto con una tolerancia más laxa que `tol`.
    """
    path = cache_path(params, cache_dir)
    if not path.exists():
        return None
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        logger.warning(f"⚠️ Entrada de caché ilegible ({path.name}): {str(e)}")
        return None
    if not isinstance(document, dict) or document.get("version") != CACHE_FORMAT_VERSION:
        return None
    try:
        cached_tol = float(document["tol"])
        if tol is not None and cached_tol > tol:
            logger.info(f"Caché con tolerancia {cached_tol:.1e} > {tol:.1e}; se recalcula {path.name}")
            return None
        coeffs = np.array([float(c) for c in document["coeffs"]]).reshape(document["shape"])
        return GroundState(
            params=DickeParams(**document["params"]),
            coeffs=coeffs,
            energy=float(document["energy"]),
            parity=int(document["parity"]),
            residual=float(document["residual"]),
            tol=cached_tol,
            solver=document["solver"],
        )
    except (KeyError, TypeError, ValueError) as e:
        # ValidationError de pydantic hereda de ValueError
        logger.warning(f"⚠️ Entrada de caché incompleta ({path.name}): {e!r}; se recalcula")
        return None


def cached_ground_state(params: DickeParams, tol: float = 1e-10, cache_dir: Optional[str] = None) -> GroundState:
    """Consulta la caché y, si falta, resuelve y la puebla."""
    gs = load_ground_state(params, cache_dir, tol)
    if gs is not None:
        logger.debug(f"✓ Caché: {cache_key(params)}")
        return gs
    gs = ground_state(params, tol=tol)
    save_ground_state(gs, cache_dir)
    return gs
