"""
commands/optimize_j.py
======================
Подкоманда optimize-j: сканирование сетки J и выбор лучшего значения.
"""

import logging
from config import RunConfig
from experiments import scan_j, best_j
from formats import trace_path, write_trace, write_j_scan, write_manifest
from commands import emit

logger = logging.getLogger(__name__)


def cmd_optimize_j(cfg: RunConfig):
    """
    Для каждого J сетки repetitions запусков с глубиной cfg.layers;
    трассы в run_dir/J<j>/, итог в j_scan.csv
    """
    run_dir = cfg.run_dir()

    def on_trace(result):
        job = result.job
        if result.trace.records:
            write_trace(trace_path(run_dir / f"J{job.params.j:+.4f}", job.seed), result.trace)

    rows = scan_j(
        cfg.lattice(),
        cfg.hubbard_params(),
        cfg.layers,
        cfg.j_grid,
        repetitions=cfg.repetitions,
        evolution=cfg.evolution_config(),
        seed_base=cfg.seed,
        perturb_bound=cfg.perturb_bound,
        particles=cfg.particles,
        workers=cfg.workers,
        on_trace=on_trace,
    )
    j = best_j(rows)
    path = write_j_scan(run_dir / "j_scan.csv", rows)
    failures = [{"j": row.j, "seed": seed, "message": message} for row in rows for seed, message in row.failures]
    write_manifest(
        run_dir / "manifest.json", cfg.to_dict(),
        seeds={f"J{row.j:+.4f}": list(row.seeds) for row in rows},
        failures=failures,
        results={"best_j": j},
    )
    emit("best_j", j)
    emit("j_scan", path)


def register(subparsers, parents: list):
    parser = subparsers.add_parser("optimize-j", parents=parents, help="Подбор J по сетке (j_scan.csv)")
    parser.set_defaults(handler=cmd_optimize_j)
