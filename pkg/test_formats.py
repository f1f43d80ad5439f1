import json
import pytest
from operator_algebra import OperatorSum
from statevector import basis_state
from evolution import EvolutionTrace, TraceRecord
from formats import (
    read_csv,
    read_operator,
    read_state,
    trace_path,
    versions,
    write_manifest,
    write_operator,
    write_state,
    write_trace,
)


def test_trace_paths(tmp_path):
    assert trace_path(tmp_path, 4) == tmp_path / "trace_4.csv"
    assert trace_path(tmp_path, 4, 2, "imaginary_time", "left_tc") == \
        tmp_path / "L2_imaginary_time_left_tc" / "trace_4.csv"


def test_trace_csv_layout(tmp_path):
    trace = EvolutionTrace(records=[
        TraceRecord(tau=0.0, e_real=-1.5, e_imag=0.25, grad_norm=2.0, a_rank=7),
        TraceRecord(tau=0.1, e_real=-1.75, e_imag=-0.0, fidelity_right=0.5, fidelity_left=0.25,
                    grad_norm=1.0, a_rank=6),
    ])
    path = write_trace(tmp_path / "nested" / "trace_0.csv", trace)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "tau,e_real,e_imag,fid_right,fid_left,grad_norm,a_rank"
    assert lines[1] == "0.000000000000e+00,-1.500000000000e+00,2.500000000000e-01,,,2.000000000000e+00,7"
    assert read_csv(path)[1]["fid_left"] == "2.500000000000e-01"
    assert b"\r" not in path.read_bytes()


def test_operator_and_state_files(tmp_path):
    op = OperatorSum(2, {"XZ": 0.5 - 0.25j, "II": 1.0})
    assert read_operator(write_operator(tmp_path / "h.txt", op)).terms == pytest.approx(op.terms)
    state = basis_state(3, 5)
    restored = read_state(write_state(tmp_path / "s.bin", state))
    assert restored.amplitudes.tolist() == state.amplitudes.tolist()


def test_manifest_is_sorted_and_stable(tmp_path):
    path = write_manifest(tmp_path / "manifest.json", {"b": 1, "a": [0.5]}, seeds=[0, 1],
                          results={"best_j": -0.6})
    text = path.read_text(encoding="utf-8")
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert data["config"] == {"a": [0.5], "b": 1}
    assert data["failures"] == []
    assert data["results"] == {"best_j": -0.6}
    assert data["versions"] == versions()
    assert write_manifest(tmp_path / "manifest.json", {"b": 1, "a": [0.5]}, seeds=[0, 1],
                          results={"best_j": -0.6}).read_text(encoding="utf-8") == text
