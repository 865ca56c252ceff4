# main.py
"""
CLI del análisis de Husimi del modelo de Dicke.

Subcomandos: sweep, compare, zeros, grid, converge y runs (corridas guardadas).
Un archivo JSON (--config) refleja SweepConfig; cada flag lo sobrescribe.
Códigos de salida: 0 éxito, 2 configuración, 3 fallo numérico, 4 parcial.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app.config import get_log_level
from app.exceptions import ConfigError
from app.middleware import handle_errors, task_logging
from app.schemas import QuadratureSpec, SweepConfig
from app.sweep import cmd_compare, cmd_converge, cmd_grid, cmd_runs, cmd_sweep, cmd_zeros
from app.utils import parse_cell, parse_float_list, parse_lambda_grid

logger = logging.getLogger(__name__)


# ===== CONFIGURACIÓN DE LOGGING =====
def configure_logging(level: Optional[str] = None):
    logging.basicConfig(
        level=(level or get_log_level()).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


# ===== PARSER =====
def _common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=str, default=None, help="Documento JSON con SweepConfig")
    parser.add_argument("--omega", type=float, default=None)
    parser.add_argument("--omega0", type=float, default=None)
    parser.add_argument("--two-j", type=int, default=None)
    parser.add_argument("--n-cut", type=int, default=None, help="Corte fijo; sin él se elige por convergencia")
    parser.add_argument("--lambda-grid", type=str, default=None, help='"lo:hi:step" o "0,0.1,0.2"')
    parser.add_argument("--channels", type=str, default=None, help="numeric,variational")
    parser.add_argument("--nu", type=str, default=None, help="Lista de ν, p. ej. 0.5,1.5,2,3,4")
    parser.add_argument("--nodes", type=int, default=None, help="Nodos mínimos por eje")
    parser.add_argument("--tol", type=float, default=None, help="Tolerancia de norma de la cuadratura")
    parser.add_argument("--scheme", choices=["gauss-hermite", "trapezoid"], default=None)
    parser.add_argument("--box", type=float, default=None, help="Semiancho de la caja por eje")
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--format", choices=["csv", "json"], default=None)
    parser.add_argument("--cache-dir", type=str, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--db-url", type=str, default=None)
    parser.add_argument("--energy-tol", type=float, default=None)
    parser.add_argument("--n-max", type=int, default=None, help="Corte máximo del estudio de convergencia")
    parser.add_argument("--log-level", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Medidas de localización de Husimi en el modelo de Dicke.")
    sub = parser.add_subparsers(dest="command", required=True)

    _common_flags(sub.add_parser("sweep", help="Barrido en λ: una fila por (λ, canal)"))
    _common_flags(sub.add_parser("compare", help="Diferencias numérico − variacional por λ"))

    zeros = sub.add_parser("zeros", help="Franjas de ceros de Φ₊ por celda")
    _common_flags(zeros)
    zeros.add_argument("--cell", type=str, default="-1,1,-1,1", help="a_lo,a_hi,b_lo,b_hi")
    zeros.add_argument("--lambda", dest="lam", type=float, default=None, help="Conjunto adicional (con --two-j)")

    grid = sub.add_parser("grid", help="Volcado de Husimi, marginales o densidades suavizadas")
    _common_flags(grid)
    grid.add_argument("--lambda", dest="lam", type=float, required=True)
    grid.add_argument("--plane", type=str, default="alpha")
    grid.add_argument("--channel", choices=["numeric", "variational"], default="numeric")
    grid.add_argument("--bounds", type=str, default="-4,4,-4,4", help="lo1,hi1,lo2,hi2")
    grid.add_argument("--resolution", type=int, default=81)
    grid.add_argument("--fixed", type=str, default="0,0", help="Par de coordenadas fijas del plano")

    converge = sub.add_parser("converge", help="Estudio de convergencia del corte de Fock")
    _common_flags(converge)
    converge.add_argument("--lambda", dest="lam", type=float, required=True)

    runs = sub.add_parser("runs", help="Corridas guardadas: listado, filas o borrado")
    _common_flags(runs)
    runs.add_argument("--show", type=int, default=None, help="Id de la corrida cuyas filas se muestran")
    runs.add_argument("--delete", type=int, default=None, help="Id de la corrida a borrar")
    runs.add_argument("--skip", type=int, default=0)
    runs.add_argument("--limit", type=int, default=10)
    return parser


def build_config(args: argparse.Namespace) -> SweepConfig:
    """JSON de --config primero, flags después (None = no dado)."""
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"No se pudo leer la configuración '{args.config}': {str(e)}")
    overrides = {
        "omega": args.omega,
        "omega0": args.omega0,
        "two_j": args.two_j,
        "n_cut": args.n_cut,
        "lambda_grid": parse_lambda_grid(args.lambda_grid) if args.lambda_grid is not None else None,
        "channels": [c.strip() for c in args.channels.split(",") if c.strip()] if args.channels else None,
        "nu_list": parse_float_list(args.nu) if args.nu else None,
        "output": args.out,
        "format": args.format,
        "cache_dir": args.cache_dir,
        "workers": args.workers,
        "db_url": args.db_url,
        "energy_tol": args.energy_tol,
        "n_cut_max": args.n_max,
    }
    data.update({key: value for key, value in overrides.items() if value is not None})
    quad = dict(data.get("quad", {}))
    quad_flags = {
        "nodes_per_axis": args.nodes, "target_tol": args.tol,
        "scheme": args.scheme, "box_halfwidth": args.box,
    }
    quad.update({key: value for key, value in quad_flags.items() if value is not None})
    data["quad"] = QuadratureSpec(**quad)
    return SweepConfig(**data)


@handle_errors
def run_from_args(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    with task_logging(args.command):
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "compare":
            return cmd_compare(cfg)
        if args.command == "zeros":
            extra = [(args.lam, cfg.two_j)] if args.lam is not None else []
            return cmd_zeros(cfg, parse_cell(args.cell), cfg.output or "zeros", extra)
        if args.command == "grid":
            bounds = parse_cell(args.bounds)
            fixed = parse_float_list(args.fixed)
            if len(fixed) != 2:
                raise ConfigError(f"--fixed necesita 2 valores (recibido '{args.fixed}')")
            return cmd_grid(cfg, args.lam, args.plane, args.channel, bounds, args.resolution, cfg.output, tuple(fixed))
        if args.command == "converge":
            return cmd_converge(cfg, args.lam, cfg.output)
        if args.command == "runs":
            if args.show is not None and args.delete is not None:
                raise ConfigError("--show y --delete son excluyentes")
            return cmd_runs(cfg, args.show, args.delete, args.skip, args.limit)
    raise ConfigError(f"Comando '{args.command}' desconocido")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    return run_from_args(args)


if __name__ == "__main__":
    sys.exit(main())
