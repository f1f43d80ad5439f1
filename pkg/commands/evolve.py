"""
commands/evolve.py
==================
Подкоманда evolve: одиночный запуск эволюции с записью трассы.
"""

import logging
from config import RunConfig
from exceptions import NumericalFailure
from experiments import run_single
from formats import trace_path, write_trace, write_manifest
from commands import emit

logger = logging.getLogger(__name__)


def cmd_evolve(cfg: RunConfig):
    """
    Запускает run_single; при численной ошибке частичная трасса
    сохраняется до выхода с кодом 3
    """
    spec = cfg.experiment_spec(single=True)
    path = trace_path(cfg.run_dir(), cfg.seed)
    try:
        trace = run_single(spec)
    except NumericalFailure as e:
        if e.trace is not None and e.trace.records:
            write_trace(path, e.trace)
            logger.error(f"Частичная трасса ({len(e.trace)} записей) сохранена в {path}")
        write_manifest(cfg.run_dir() / "manifest.json", cfg.to_dict(), seeds=[cfg.seed],
                       failures=[{"seed": cfg.seed, "message": str(e)}])
        raise

    write_trace(path, trace)
    write_manifest(cfg.run_dir() / "manifest.json", cfg.to_dict(), seeds=[cfg.seed])
    final = trace.final
    emit("tau", final.tau)
    emit("e_real", final.e_real)
    emit("e_imag", final.e_imag)
    emit("fid_right", final.fidelity_right)
    emit("fid_left", final.fidelity_left)
    emit("trace", path)


def register(subparsers, parents: list):
    parser = subparsers.add_parser("evolve", parents=parents, help="Одиночная эволюция (trace_<seed>.csv)")
    parser.set_defaults(handler=cmd_evolve)
