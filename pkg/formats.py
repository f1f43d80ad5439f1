"""
formats.py
==========
Файловые форматы: текст оператора, двоичный вектор состояния,
CSV трассы/развёртки/сканирования J и manifest.json.

Все выходы детерминированы: фиксированный формат чисел, сортированные
ключи JSON, без временных меток.
"""

import csv
import io
import json
import logging
import platform
from pathlib import Path
import numpy as np
import scipy
from config import VERSION
from operator_algebra import OperatorSum
from statevector import StateVector, to_bytes, from_bytes

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["tau", "e_real", "e_imag", "fid_right", "fid_left", "grad_norm", "a_rank"]
SWEEP_COLUMNS = ["layers", "method", "target", "mean_fid", "stderr_fid", "mean_abs_re_resid", "mean_abs_im_resid"]
J_SCAN_COLUMNS = ["j", "mean_fid", "stderr_fid"]


def _number(value) -> str:
    """%.12e, пустая строка для отсутствующего значения"""
    if value is None:
        return ""
    return "%.12e" % value


def _write_csv(path, columns: list, rows: list) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO(newline="")
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: row.get(key, "") for key in columns})
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


def read_csv(path) -> list:
    """Строки CSV как словари строк"""
    with Path(path).open(encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


# ============================================================================
# ОПЕРАТОРЫ И СОСТОЯНИЯ
# ============================================================================

def write_operator(path, operator: OperatorSum) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(operator.to_text(), encoding="utf-8")
    return path


def read_operator(path, qubit_count: int = None) -> OperatorSum:
    return OperatorSum.from_text(Path(path).read_text(encoding="utf-8"), qubit_count)


def write_state(path, state) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_bytes(state))
    return path


def read_state(path) -> StateVector:
    return from_bytes(Path(path).read_bytes())


# ============================================================================
# CSV
# ============================================================================

def trace_path(run_dir, seed: int, layers: int = None, method: str = None, target: str = None) -> Path:
    """
    runs/<name>/trace_<seed>.csv для одиночного запуска,
    runs/<name>/L<layers>_<method>_<target>/trace_<seed>.csv для развёрток
    """
    run_dir = Path(run_dir)
    if layers is None:
        return run_dir / f"trace_{seed}.csv"
    return run_dir / f"L{layers}_{method}_{target}" / f"trace_{seed}.csv"


def write_trace(path, trace) -> Path:
    """Колонки tau,e_real,e_imag,fid_right,fid_left,grad_norm,a_rank"""
    rows = [
        {
            "tau": _number(record.tau),
            "e_real": _number(record.e_real),
            "e_imag": _number(record.e_imag),
            "fid_right": _number(record.fidelity_right),
            "fid_left": _number(record.fidelity_left),
            "grad_norm": _number(record.grad_norm),
            "a_rank": str(int(record.a_rank)),
        }
        for record in trace.records
    ]
    return _write_csv(path, TRACE_COLUMNS, rows)


def write_sweep(path, result) -> Path:
    rows = [
        {
            "layers": str(row.layers),
            "method": row.method.value,
            "target": row.target.value,
            "mean_fid": _number(row.mean_fidelity),
            "stderr_fid": _number(row.stderr_fidelity),
            "mean_abs_re_resid": _number(row.mean_abs_re_residual),
            "mean_abs_im_resid": _number(row.mean_abs_im_residual),
        }
        for row in result.rows
    ]
    return _write_csv(path, SWEEP_COLUMNS, rows)


def write_j_scan(path, rows: list) -> Path:
    return _write_csv(path, J_SCAN_COLUMNS, [
        {"j": _number(row.j), "mean_fid": _number(row.mean_fidelity), "stderr_fid": _number(row.stderr_fidelity)}
        for row in rows
    ])


# ============================================================================
# MANIFEST
# ============================================================================

def versions() -> dict:
    return {
        "tcvqite": VERSION,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(path, config: dict, seeds=None, failures=None, results: dict = None) -> Path:
    """
    manifest.json: эффективная конфигурация, seed, упавшие повторы, версии

    Args:
        path: Путь файла
        config (dict): RunConfig.to_dict()
        seeds: Seed по строкам ({"L1_imaginary_time_right_tc": [0, 1, ...]} или список)
        failures: Список описаний упавших повторов
        results (dict): Дополнительные итоговые величины (например, выбранное J)
    """
    payload = {
        "config": config,
        "seeds": seeds if seeds is not None else [],
        "failures": failures if failures is not None else [],
        "versions": versions(),
    }
    if results:
        payload["results"] = results
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.debug(f"Записан {path}")
    return path
