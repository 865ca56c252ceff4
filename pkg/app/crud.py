# app/crud.py
import json
import math
from typing import List, Optional

from sqlalchemy import func
from sqlalchemy.orm import Session

from . import models

# --- CRUD de corridas (SweepRun) ---


def create_run(db: Session, command: str, config_json: str) -> models.SweepRun:
    db_run = models.SweepRun(command=command, config_json=config_json, status="running")
    db.add(db_run)
    db.commit()
    db.refresh(db_run)
    return db_run


def get_run(db: Session, run_id: int) -> Optional[models.SweepRun]:
    return db.query(models.SweepRun).filter(models.SweepRun.id == run_id).first()


def list_runs(db: Session, skip: int = 0, limit: int = 10) -> List[models.SweepRun]:
    return db.query(models.SweepRun).order_by(models.SweepRun.id).offset(skip).limit(limit).all()


def finish_run(db: Session, db_run: models.SweepRun, status: str) -> models.SweepRun:
    # ok, partial o failed
    db_run.status = status
    db_run.finished_at = func.now()
    db.add(db_run)
    db.commit()
    db.refresh(db_run)
    return db_run


def delete_run(db: Session, db_run: models.SweepRun):
    # Las filas se borran en cascada
    db.delete(db_run)
    db.commit()


# --- CRUD de filas (MeasureRow) ---


def _optional(value) -> Optional[float]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(value)


def add_rows(db: Session, db_run: models.SweepRun, rows: List[dict]) -> List[models.MeasureRow]:
    """Guarda filas planas del barrido (las fallidas llevan la clave 'error')."""
    db_rows = []
    for row in rows:
        n_cut = row.get("n_cut")
        db_row = models.MeasureRow(
            run_id=db_run.id,
            channel=row["channel"],
            lam=float(row["lambda"]),
            two_j=int(row["two_j"]),
            n_cut=None if _optional(n_cut) is None else int(n_cut),
            P=_optional(row.get("P")),
            W=_optional(row.get("W")),
            payload=json.dumps({k: v for k, v in row.items() if k != "error"}, default=str),
            error=row.get("error") or None,
        )
        db.add(db_row)
        db_rows.append(db_row)
    db.commit()
    for db_row in db_rows:
        db.refresh(db_row)
    return db_rows


def get_rows(db: Session, run_id: int, channel: Optional[str] = None) -> List[models.MeasureRow]:
    query = db.query(models.MeasureRow).filter(models.MeasureRow.run_id == run_id)
    if channel is not None:
        query = query.filter(models.MeasureRow.channel == channel)
    return query.order_by(models.MeasureRow.lam, models.MeasureRow.channel).all()


def count_failed_rows(db: Session, run_id: int) -> int:
    return db.query(models.MeasureRow).filter(
        models.MeasureRow.run_id == run_id,
        models.MeasureRow.error.isnot(None),
    ).count()
