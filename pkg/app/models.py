# app/models.py
from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text, func
from sqlalchemy.orm import declarative_base, relationship

# Clase base para todos los modelos
Base = declarative_base()


class SweepRun(Base):
    __tablename__ = 'sweep_runs'

    id = Column(Integer, primary_key=True, index=True)
    # sweep, compare, converge...
    command = Column(String, nullable=False)
    config_json = Column(Text, nullable=False)
    status = Column(String, nullable=False, default="running")
    created_at = Column(DateTime(timezone=True), server_default=func.now())
    finished_at = Column(DateTime(timezone=True), nullable=True)

    # Relación: una corrida tiene muchas filas λ-canal
    rows = relationship("MeasureRow", back_populates="run", cascade="all, delete-orphan")


class MeasureRow(Base):
    __tablename__ = 'measure_rows'

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey('sweep_runs.id'), nullable=False, index=True)
    channel = Column(String, nullable=False)
    lam = Column(Float, nullable=False)
    two_j = Column(Integer, nullable=False)
    n_cut = Column(Integer, nullable=True)
    P = Column(Float, nullable=True)
    W = Column(Float, nullable=True)
    # Fila completa (incluye M_ν) en JSON
    payload = Column(Text, nullable=True)
    # Filas fallidas: sólo el mensaje
    error = Column(Text, nullable=True)

    run = relationship("SweepRun", back_populates="rows")
