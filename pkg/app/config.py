# app/config.py
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Para desarrollo local: variables en .env (opcional)
load_dotenv()

CACHE_FORMAT_VERSION = "1"
DEFAULT_CACHE_DIR = ".dicke_cache"


def get_cache_dir(override: Optional[str] = None) -> Path:
    """Directorio de la caché de estados fundamentales (flag > entorno > defecto)."""
    if override:
        return Path(override)
    return Path(os.environ.get("DICKE_CACHE_DIR", DEFAULT_CACHE_DIR))


def get_max_dimension() -> int:
    return int(os.environ.get("DICKE_MAX_DIMENSION", "200000"))


def get_dense_max() -> int:
    """Mayor bloque que resuelve el respaldo denso."""
    return int(os.environ.get("DICKE_DENSE_MAX", "2000"))


def get_log_level() -> str:
    return os.environ.get("DICKE_LOG_LEVEL", "INFO").upper()


def get_database_url(override: Optional[str] = None) -> Optional[str]:
    # Sin URL no se persisten los barridos
    return override or os.environ.get("DATABASE_URL") or None
