"""
conftest.py
===========
Общие фикстуры тестов и опция --runslow для длинных воспроизводящих проверок.
"""

from functools import reduce
import numpy as np
import pytest

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="Запускать медленные тесты")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: длинная проверка, запускается с --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="нужен --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def kron_pauli():
    """Матрица строки Паули произведением Кронекера; кубит 0 является младшим множителем"""
    def build(letters: str) -> np.ndarray:
        return reduce(np.kron, [_PAULI[letter] for letter in reversed(letters)])
    return build


@pytest.fixture
def kron_operator(kron_pauli):
    """Плотная матрица OperatorSum, построенная независимо от oracle"""
    def build(operator) -> np.ndarray:
        dim = 1 << operator.qubit_count
        matrix = np.zeros((dim, dim), dtype=np.complex128)
        for letters, coefficient in operator.terms.items():
            matrix += coefficient * kron_pauli(letters)
        return matrix
    return build


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_state(rng):
    """Случайный нормированный вектор на n кубитах"""
    from statevector import from_amplitudes

    def build(qubit_count: int):
        dim = 1 << qubit_count
        return from_amplitudes(qubit_count, rng.normal(size=dim) + 1j * rng.normal(size=dim))
    return build
