# app/database.py
from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from .config import get_database_url
from .models import Base


def make_engine(url: Optional[str] = None) -> Optional[Engine]:
    """
    Motor para la URL dada (o DATABASE_URL). Sin URL no hay persistencia.
    SQLite en memoria comparte una única conexión.
    """
    url = get_database_url(url)
    if not url:
        return None
    if url.startswith("sqlite") and ":memory:" in url:
        return create_engine(url, connect_args={"check_same_thread": False}, poolclass=StaticPool)
    return create_engine(url)


def make_session_factory(engine: Engine) -> sessionmaker:
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


def create_db_tables(engine: Engine):
    """Crea las tablas definidas en models.py si no existen."""
    Base.metadata.create_all(bind=engine)
