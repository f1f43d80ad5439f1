"""
commands/sweep.py
=================
Подкоманды sweep (глубина × метод) и compare-targets (глубина × цель).
"""

import logging
from config import RunConfig
from experiments import run_depth_sweep, run_target_comparison
from formats import trace_path, write_trace, write_sweep, write_manifest

logger = logging.getLogger(__name__)


def _trace_writer(run_dir):
    """Пишет трассу каждого завершённого повтора (включая частичные)"""
    def on_trace(result):
        job = result.job
        if result.trace.records:
            write_trace(trace_path(run_dir, job.seed, job.layers, job.method.value, job.target.value), result.trace)
    return on_trace


def _finish(cfg: RunConfig, result):
    run_dir = cfg.run_dir()
    path = write_sweep(run_dir / "sweep.csv", result)
    seeds = {f"L{row.layers}_{row.method.value}_{row.target.value}": list(row.seeds) for row in result.rows}
    failures = [
        {"layers": layers, "method": method, "target": target, "seed": seed, "message": message}
        for layers, method, target, seed, message in result.failures()
    ]
    write_manifest(run_dir / "manifest.json", cfg.to_dict(), seeds=seeds, failures=failures,
                   results={"ground_energy": result.ground_energy})
    if failures:
        logger.warning(f"Исключено повторов: {len(failures)}")
    print(path.read_text(encoding="utf-8"), end="", flush=True)


def cmd_sweep(cfg: RunConfig):
    result = run_depth_sweep(cfg.experiment_spec(), on_trace=_trace_writer(cfg.run_dir()))
    _finish(cfg, result)


def cmd_compare_targets(cfg: RunConfig):
    result = run_target_comparison(cfg.experiment_spec(), on_trace=_trace_writer(cfg.run_dir()))
    _finish(cfg, result)


def register(subparsers, parents: list):
    """Регистрирует sweep и compare-targets"""
    parser = subparsers.add_parser("sweep", parents=parents, help="Развёртка по глубине и методам (sweep.csv)")
    parser.set_defaults(handler=cmd_sweep)
    parser = subparsers.add_parser(
        "compare-targets", parents=parents, help="Сравнение целей right_tc / left_tc / regular (sweep.csv)"
    )
    parser.set_defaults(handler=cmd_compare_targets)
