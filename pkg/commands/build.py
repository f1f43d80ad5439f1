"""
commands/build.py
=================
Подкоманда build: строит кубитный оператор и сохраняет его текст.
"""

import logging
from config import RunConfig
from model import build_hubbard, build_tc_hubbard, build_noninteracting, gutzwiller_generator
from formats import write_operator, write_manifest
from commands import emit

logger = logging.getLogger(__name__)


_BUILDERS = {
    "hubbard": lambda lat, p: build_hubbard(lat, p),
    "tc": lambda lat, p: build_tc_hubbard(lat, p),
    "noninteracting": lambda lat, p: build_noninteracting(lat, p),
    "gutzwiller": lambda lat, p: gutzwiller_generator(lat),
}


def cmd_build(cfg: RunConfig):
    """
    Строит оператор cfg.operator и пишет run_dir/hamiltonian.txt

    Args:
        cfg (RunConfig): Конфигурация
    """
    lat = cfg.lattice()
    operator = _BUILDERS[cfg.operator](lat, cfg.hubbard_params())
    path = write_operator(cfg.run_dir() / "hamiltonian.txt", operator)
    write_manifest(cfg.run_dir() / "manifest.json", cfg.to_dict())
    logger.info(f"Оператор {cfg.operator} {lat.label()}: {len(operator)} термов -> {path}")

    emit("operator", cfg.operator)
    emit("qubits", operator.qubit_count)
    emit("terms", len(operator))
    emit("non_identity_terms", len(operator.non_identity_terms()))
    emit("hermitian", str(operator.is_hermitian()).lower())
    emit("path", path)


def register(subparsers, parents: list):
    parser = subparsers.add_parser("build", parents=parents, help="Построить гамильтониан и записать hamiltonian.txt")
    parser.set_defaults(handler=cmd_build)
