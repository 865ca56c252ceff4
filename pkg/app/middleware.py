# app/middleware.py
import functools
import logging
import time
from contextlib import contextmanager
from typing import Callable

from pydantic import ValidationError

from app.exceptions import EXIT_CONFIG, EXIT_NUMERIC, DickeError

logger = logging.getLogger(__name__)


@contextmanager
def task_logging(task: str):
    """
    Registra una tarea del CLI: nombre, resultado y tiempo.
    → al entrar, ← con [ok] y segundos al salir, ✗ con el error.
    """
    start_time = time.time()
    logger.info(f"→ {task}")
    try:
        yield
    except Exception as e:
        process_time = time.time() - start_time
        logger.error(f"✗ {task} ERROR: {str(e)} ({process_time:.3f}s)")
        raise
    process_time = time.time() - start_time
    logger.info(f"← {task} [ok] {process_time:.3f}s")


def handle_errors(func: Callable[..., int]) -> Callable[..., int]:
    """
    Manejo global de errores del CLI: convierte excepciones en códigos de salida.
    DickeError usa su propio código; ValidationError y ValueError son de
    configuración (2); cualquier otra es numérica (3) y se registra con traza.
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except DickeError as e:
            logger.error(f"✗ {e.detail}")
            return e.exit_code
        except (ValidationError, ValueError) as e:
            logger.error(f"✗ Valor inválido: {str(e)}")
            return EXIT_CONFIG
        except Exception:
            logger.exception("Error interno no manejado")
            return EXIT_NUMERIC

    return wrapper
