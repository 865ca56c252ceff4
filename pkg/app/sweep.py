# app/sweep.py
"""
Orquestación de las tareas del CLI: barridos en λ, comparación de canales,
mapas de ceros, volcados de rejilla y estudios de convergencia del corte.

Las tareas por (λ, canal) pueden repartirse en hilos; los resultados se
reúnen siempre en el orden de la rejilla, de modo que la salida es idéntica
byte a byte para cualquier número de hilos.
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app import crud
from app.cache import cached_ground_state
from app.coherent import husimi_hp_values
from app.database import create_db_tables, make_engine, make_session_factory
from app.exceptions import EXIT_OK, EXIT_PARTIAL, ConfigError, ConvergenceError, ResonanceError
from app.ground_state import convergence_study
from app.measures import marginal_husimi, measure_report
from app.schemas import REPORT_COLUMNS, DickeParams, GroundState, MeasureReport, QuadratureSpec, SweepConfig
from app.smearing import smearing_config, smeared_momentum_grid, smeared_position_grid
from app.utils import format_decimal, moment_column, near_critical
from app.variational import analytic_marginal_husimi, ansatz_log_husimi, ansatz_measures, make_ansatz
from app.zeros import husimi_zero_lines

logger = logging.getLogger(__name__)

# Representación de ida y vuelta: 0.05 -> "0.05"
FLOAT_FORMAT = format_decimal
COMPARE_QUANTITIES = ["P", "W", "P1", "P2", "W1", "W2"]
ZERO_COLUMNS = ["space", "l", "slope", "intercept", "seg_a_lo", "seg_b_lo", "seg_a_hi", "seg_b_hi"]
CONVERGE_COLUMNS = ["n_cut", "energy", "delta_energy", "leakage", "converged", "chosen"]
# Conjuntos (λ, 2j) de los mapas de franjas
ZERO_SETS = [(0.6, 20), (0.6, 200), (10.0, 20), (10.0, 200)]
GRID_PLANES = {
    "alpha": ["alpha1", "alpha2", "beta1", "beta2", "phi"],
    "beta": ["alpha1", "alpha2", "beta1", "beta2", "phi"],
    "marginal1": ["alpha1", "beta1", "phi1"],
    "marginal2": ["alpha2", "beta2", "phi2"],
    "xi": ["x", "y", "xi"],
    "xi_tilde": ["kx", "ky", "xi_tilde"],
}


# ===== ESCRITURA DE TABLAS =====
def write_table(df: pd.DataFrame, output: Optional[str], fmt: str = "csv") -> Optional[Path]:
    """CSV con decimales exactos (o JSON de registros); sin ruta, a stdout."""
    if output is None:
        print(df.to_csv(index=False, float_format=FLOAT_FORMAT), end="")
        return None
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        df.to_json(path, orient="records", indent=2, double_precision=15)
    else:
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"✓ Tabla escrita: {path} ({len(df)} filas)")
    return path


def write_sidecar(path: Path, metadata: dict) -> Path:
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(metadata, indent=2, sort_keys=True), encoding="utf-8")
    return sidecar


# ===== PUNTOS DEL BARRIDO =====
def solve_point(cfg: SweepConfig, lam: float) -> GroundState:
    """Estado fundamental con n_c fijo o elegido por convergencia, pasando por la caché."""
    def solve(params: DickeParams) -> GroundState:
        return cached_ground_state(params, tol=cfg.eigen_tol, cache_dir=cfg.cache_dir)

    if cfg.n_cut is not None:
        return solve(cfg.params_for(lam, cfg.n_cut))
    _, gs = convergence_study(
        cfg.params_for(lam), energy_tol=cfg.energy_tol, n_cut_max=cfg.n_cut_max,
        tol=cfg.eigen_tol, solve=solve,
    )
    return gs


def run_point(cfg: SweepConfig, lam: float, channel: str) -> MeasureReport:
    if channel == "numeric":
        return measure_report(solve_point(cfg, lam), cfg.quad, cfg.nu_list)
    if channel == "variational":
        return ansatz_measures(make_ansatz(cfg.params_for(lam)), cfg.nu_list)
    raise ConfigError(f"Canal '{channel}' desconocido")


def table_columns(nus: Sequence[float]) -> List[str]:
    return REPORT_COLUMNS + [moment_column(nu) for nu in nus]


def _error_row(cfg: SweepConfig, lam: float, channel: str, detail: str) -> dict:
    row = {column: math.nan for column in table_columns(cfg.nu_list)}
    row.update({"channel": channel, "lambda": lam, "two_j": cfg.two_j, "n_cut": cfg.n_cut, "error": detail})
    return row


def _safe_point(cfg: SweepConfig, task: Tuple[float, str]) -> dict:
    lam, channel = task
    try:
        report = run_point(cfg, lam, channel)
    except Exception as e:
        detail = getattr(e, "detail", str(e))
        logger.error(f"✗ λ={lam} ({channel}): {detail}")
        return _error_row(cfg, lam, channel, detail)
    row = report.row(cfg.nu_list)
    row["error"] = ""
    return row


def sweep_rows(cfg: SweepConfig) -> List[dict]:
    tasks = [(lam, channel) for lam in cfg.lambda_grid for channel in cfg.channels]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(lambda task: _safe_point(cfg, task), tasks))
    return [_safe_point(cfg, task) for task in tasks]


def rows_frame(rows: List[dict], nus: Sequence[float]) -> pd.DataFrame:
    """Cabecera fija; la columna 'error' sólo aparece si alguna fila falló."""
    columns = table_columns(nus)
    if any(row.get("error") for row in rows):
        columns = columns + ["error"]
    df = pd.DataFrame(rows, columns=columns)
    df["n_cut"] = df["n_cut"].astype("Int64")
    return df


# ===== PERSISTENCIA OPCIONAL =====
def persist_run(cfg: SweepConfig, command: str, rows: List[dict], status: str) -> Optional[int]:
    engine = make_engine(cfg.db_url)
    if engine is None:
        return None
    create_db_tables(engine)
    session = make_session_factory(engine)()
    try:
        run = crud.create_run(session, command, cfg.model_dump_json())
        crud.add_rows(session, run, rows)
        crud.finish_run(session, run, status)
        logger.info(f"✓ Corrida #{run.id} guardada ({len(rows)} filas, {status})")
        return run.id
    finally:
        session.close()


def _status(rows: List[dict]) -> Tuple[str, int]:
    failed = sum(1 for row in rows if row.get("error"))
    if failed == 0:
        return "ok", EXIT_OK
    return ("failed" if failed == len(rows) else "partial"), EXIT_PARTIAL


# ===== COMANDOS =====
def cmd_sweep(cfg: SweepConfig) -> int:
    """Una fila por (λ, canal); código 4 si algún punto falló."""
    rows = sweep_rows(cfg)
    write_table(rows_frame(rows, cfg.nu_list), cfg.output, cfg.format)
    status, code = _status(rows)
    persist_run(cfg, "sweep", rows, status)
    return code


def compare_frame(rows: List[dict], critical: float) -> pd.DataFrame:
    by_key: Dict[Tuple[float, str], dict] = {(row["lambda"], row["channel"]): row for row in rows}
    lams = sorted({row["lambda"] for row in rows})
    records = []
    for lam in lams:
        numeric = by_key[(lam, "numeric")]
        variational = by_key[(lam, "variational")]
        record = {"lambda": lam, "excluded": near_critical(lam, critical)}
        for q in COMPARE_QUANTITIES:
            delta = numeric[q] - variational[q]
            record[f"d_{q}"] = delta
            record[f"rel_{q}"] = abs(delta) / abs(variational[q]) if variational[q] else math.nan
        record["error"] = "; ".join(r["error"] for r in (numeric, variational) if r.get("error"))
        records.append(record)
    return pd.DataFrame(records)


def cmd_compare(cfg: SweepConfig) -> int:
    """Diferencias numérico − variacional; marca la ventana |λ − λc| < 0.05λc."""
    if set(cfg.channels) != {"numeric", "variational"}:
        raise ConfigError("compare necesita los dos canales: numeric,variational")
    rows = sweep_rows(cfg)
    df = compare_frame(rows, cfg.critical_coupling)
    if not df["error"].astype(bool).any():
        df = df.drop(columns=["error"])
    write_table(df, cfg.output, cfg.format)
    status, code = _status(rows)
    persist_run(cfg, "compare", rows, status)
    return code


def zero_lines_frame(params: DickeParams, cell: Tuple[float, float, float, float]) -> pd.DataFrame:
    lines = husimi_zero_lines(params, cell, "position") + husimi_zero_lines(params, cell, "momentum")
    records = [
        [line.space, line.fringe_index, line.slope, line.intercept, *line.segment]
        for line in lines
    ]
    df = pd.DataFrame(records, columns=ZERO_COLUMNS)
    df["l"] = df["l"].astype("Int64")
    return df


def cmd_zeros(
    cfg: SweepConfig,
    cell: Tuple[float, float, float, float],
    output: str,
    extra: Sequence[Tuple[float, int]] = (),
) -> int:
    """
    Un CSV por conjunto (λ, 2j) en el directorio `output` y un resumen JSON
    con el número de franjas por conjunto y celda.
    """
    directory = Path(output)
    directory.mkdir(parents=True, exist_ok=True)
    summary = []
    for lam, two_j in list(ZERO_SETS) + list(extra):
        params = DickeParams(omega=cfg.omega, omega0=cfg.omega0, lam=lam, two_j=two_j, n_cut=0)
        df = zero_lines_frame(params, cell)
        name = f"zeros_lambda={format_decimal(lam)}_twoj={two_j}.csv"
        df.to_csv(directory / name, index=False, float_format=FLOAT_FORMAT)
        fringes = int((df["space"] == "momentum").sum())
        summary.append({
            "lambda": lam, "two_j": two_j, "cell": list(cell), "file": name,
            "momentum_fringes": fringes, "position_lines": int((df["space"] == "position").sum()),
        })
        logger.info(f"λ={lam}, 2j={two_j}: {fringes} franjas en {list(cell)}")
    (directory / "summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return EXIT_OK


def _axis(bounds: Tuple[float, float], resolution: int) -> np.ndarray:
    return np.linspace(bounds[0], bounds[1], resolution)


def grid_values(
    params: DickeParams,
    plane: str,
    channel: str,
    first: np.ndarray,
    second: np.ndarray,
    fixed: Tuple[float, float] = (0.0, 0.0),
    gs: Optional[GroundState] = None,
    quad: Optional[QuadratureSpec] = None,
) -> np.ndarray:
    """Valores sobre first ⊗ second (forma (len(first), len(second)))."""
    A, B = np.meshgrid(first, second, indexing="ij")
    kappa = 1 if plane == "marginal1" else 2
    if channel == "variational":
        st = make_ansatz(params)
        if plane == "alpha":
            return np.exp(ansatz_log_husimi(st, A, B, fixed[0], fixed[1]))
        if plane == "beta":
            return np.exp(ansatz_log_husimi(st, fixed[0], fixed[1], A, B))
        if plane in ("marginal1", "marginal2"):
            return np.vectorize(lambda a, b: analytic_marginal_husimi(st, kappa, (a, b)))(A, B)
        raise ConfigError(f"El plano '{plane}' no está disponible para el canal variacional")

    if gs is None:
        raise ConfigError("El canal numérico necesita un estado fundamental")
    if plane == "alpha":
        return husimi_hp_values(gs, A + 1j * B, complex(*fixed))
    if plane == "beta":
        return husimi_hp_values(gs, complex(*fixed), A + 1j * B)
    if plane == "xi":
        return smeared_position_grid(gs, first, second, smearing_config(params))
    if plane == "xi_tilde":
        return smeared_momentum_grid(gs, first, second, smearing_config(params))
    if plane in ("marginal1", "marginal2"):
        try:
            cfg = smearing_config(params)
        except ResonanceError as exc:
            logger.warning(f"⚠️ {exc.detail}; marginal por cuadratura directa")
            quad = quad or QuadratureSpec()
            return np.vectorize(lambda a, b: marginal_husimi(gs, kappa, (a, b), quad))(A, B)
        if plane == "marginal1":
            two_sigma = 2 * cfg.sigma
            return 2 * math.pi / cfg.omega * smeared_position_grid(gs, two_sigma * first, two_sigma * second, cfg)
        return cfg.omega / (2 * math.pi) * smeared_momentum_grid(gs, first / cfg.sigma, second / cfg.sigma, cfg)
    raise ConfigError(f"Plano '{plane}' no soportado; use {', '.join(GRID_PLANES)}")


def cmd_grid(
    cfg: SweepConfig,
    lam: float,
    plane: str,
    channel: str,
    bounds: Tuple[float, float, float, float],
    resolution: int,
    output: str,
    fixed: Tuple[float, float] = (0.0, 0.0),
) -> int:
    """Volcado fila por fila (primer eje externo) y metadatos en un JSON adjunto."""
    if resolution < 2:
        raise ConfigError(f"La resolución debe ser ≥ 2 por eje (recibido {resolution})")
    if plane not in GRID_PLANES:
        raise ConfigError(f"Plano '{plane}' no soportado; use {', '.join(GRID_PLANES)}")
    if not output:
        raise ConfigError("grid necesita --out para el CSV y su JSON adjunto")
    first = _axis(bounds[:2], resolution)
    second = _axis(bounds[2:], resolution)
    params = cfg.params_for(lam, cfg.n_cut or 0)
    gs = solve_point(cfg, lam) if channel == "numeric" else None
    if gs is not None:
        params = gs.params
    values = grid_values(params, plane, channel, first, second, fixed, gs, cfg.quad)

    A, B = np.meshgrid(first, second, indexing="ij")
    columns = GRID_PLANES[plane]
    if plane == "alpha":
        data = [A.ravel(), B.ravel(), np.full(A.size, fixed[0]), np.full(A.size, fixed[1]), values.ravel()]
    elif plane == "beta":
        data = [np.full(A.size, fixed[0]), np.full(A.size, fixed[1]), A.ravel(), B.ravel(), values.ravel()]
    else:
        data = [A.ravel(), B.ravel(), values.ravel()]
    df = pd.DataFrame(dict(zip(columns, data)), columns=columns)
    path = write_table(df, output, "csv")
    write_sidecar(path, {
        "plane": plane, "channel": channel, "bounds": list(bounds), "nodes": [resolution, resolution],
        "fixed": list(fixed), "params": params.model_dump(by_alias=True),
    })
    return EXIT_OK


def converge_frame(steps, chosen: Optional[int]) -> pd.DataFrame:
    records = [
        {**step.model_dump(), "chosen": chosen is not None and step.n_cut == chosen}
        for step in steps
    ]
    return pd.DataFrame(records, columns=CONVERGE_COLUMNS)


def cmd_converge(cfg: SweepConfig, lam: float, output: Optional[str]) -> int:
    """Tabla (n_c, E₀, ΔE, fuga) con el corte elegido; sin convergencia, tabla parcial y código 3."""
    params = cfg.params_for(lam)
    try:
        steps, gs = convergence_study(
            params, energy_tol=cfg.energy_tol, n_cut_max=cfg.n_cut_max, tol=cfg.eigen_tol,
            solve=lambda p: cached_ground_state(p, tol=cfg.eigen_tol, cache_dir=cfg.cache_dir),
        )
    except ConvergenceError as e:
        write_table(converge_frame(e.steps, None), output, cfg.format)
        raise
    write_table(converge_frame(steps, gs.params.n_cut), output, cfg.format)
    return EXIT_OK


# ===== CORRIDAS GUARDADAS =====
RUN_COLUMNS = ["id", "command", "status", "rows", "failed", "created_at", "finished_at"]


def runs_frame(session, skip: int = 0, limit: int = 10) -> pd.DataFrame:
    records = [
        {
            "id": run.id, "command": run.command, "status": run.status,
            "rows": len(run.rows), "failed": crud.count_failed_rows(session, run.id),
            "created_at": run.created_at, "finished_at": run.finished_at,
        }
        for run in crud.list_runs(session, skip=skip, limit=limit)
    ]
    return pd.DataFrame(records, columns=RUN_COLUMNS)


def stored_rows_frame(session, run_id: int) -> pd.DataFrame:
    """Filas de una corrida tal como se escribieron; las fallidas conservan su error."""
    records = []
    for row in crud.get_rows(session, run_id):
        record = json.loads(row.payload) if row.payload else {}
        if row.error:
            record["error"] = row.error
        records.append(record)
    return pd.DataFrame(records)


def cmd_runs(
    cfg: SweepConfig, show: Optional[int] = None, delete: Optional[int] = None, skip: int = 0, limit: int = 10
) -> int:
    """Lista las corridas guardadas, muestra las filas de una o la borra."""
    engine = make_engine(cfg.db_url)
    if engine is None:
        raise ConfigError("'runs' necesita una base de datos: use --db-url o DATABASE_URL")
    create_db_tables(engine)
    session = make_session_factory(engine)()
    try:
        run_id = delete if delete is not None else show
        if run_id is not None and crud.get_run(session, run_id) is None:
            raise ConfigError(f"La corrida #{run_id} no existe")
        if delete is not None:
            crud.delete_run(session, crud.get_run(session, delete))
            logger.info(f"✓ Corrida #{delete} borrada")
            return EXIT_OK
        if show is not None:
            write_table(stored_rows_frame(session, show), cfg.output, cfg.format)
            return EXIT_OK
        write_table(runs_frame(session, skip, limit), cfg.output, cfg.format)
        return EXIT_OK
    finally:
        session.close()
