"""
commands/exact.py
=================
Подкоманда exact: точные основные пары обычного и TC-гамильтонианов,
сектор числа частиц и верность начального состояния.
"""

import logging
from config import RunConfig
from model import build_hubbard, build_tc_hubbard
from ansatz import prepare_initial_state
from experiments import resolve_particles
from formats import write_state, write_manifest
import oracle
from commands import emit

logger = logging.getLogger(__name__)


def cmd_exact(cfg: RunConfig):
    """
    Печатает собственные значения, невязки и кратности для H и H'(J);
    с dump_vectors пишет right.bin и left.bin (основная пара H')
    """
    lat = cfg.lattice()
    params = cfg.hubbard_params()
    particles = resolve_particles(lat, params, cfg.particles)
    regular = oracle.ground_pair(build_hubbard(lat, params), particles=particles)
    tc = oracle.ground_pair(build_tc_hubbard(lat, params), particles=particles)
    reference = prepare_initial_state(lat, params, particles)
    initial = oracle.subspace_fidelity(regular.right_basis, reference)

    results = {
        "particles": particles,
        "regular_eigenvalue": regular.eigenvalue,
        "regular_right_residual": regular.right_residual,
        "regular_left_residual": regular.left_residual,
        "regular_degeneracy": regular.degeneracy,
        "tc_eigenvalue": tc.eigenvalue,
        "tc_right_residual": tc.right_residual,
        "tc_left_residual": tc.left_residual,
        "tc_degeneracy": tc.degeneracy,
        "initial_fidelity": initial,
    }
    for key, value in results.items():
        emit(key, value)

    if cfg.dump_vectors:
        emit("right", write_state(cfg.run_dir() / "right.bin", tc.right_vector))
        emit("left", write_state(cfg.run_dir() / "left.bin", tc.left_vector))
    write_manifest(cfg.run_dir() / "manifest.json", cfg.to_dict(), results=results)


def register(subparsers, parents: list):
    parser = subparsers.add_parser("exact", parents=parents, help="Точная диагонализация H и H'(J)")
    parser.set_defaults(handler=cmd_exact)
