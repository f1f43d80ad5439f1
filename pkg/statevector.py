"""
statevector.py
==============
Плотный движок векторов состояния: базисные состояния, действие строк Паули,
вращения Паули, скалярные произведения, комплексные средние.

Кубит 0 является младшим битом индекса базисного состояния; буква letters[q]
действует на бит q. Этим же соглашением пользуются oracle и JW-строки.
"""

import struct
import logging
from dataclasses import dataclass
from functools import lru_cache
import numpy as np
from exceptions import DimensionError
from operator_algebra import PauliTerm, OperatorSum

logger = logging.getLogger(__name__)

# Допуск нормы для StateVector
NORM_TOLERANCE = 1e-10

# Допуск единичного коэффициента генератора вращения
UNIT_TOLERANCE = 1e-12

_HEADER = struct.Struct("<Q")


# ============================================================================
# ТИПЫ
# ============================================================================

@dataclass(frozen=True, eq=False)
class StateVector:
    """
    Нормированный вектор состояния на qubit_count кубитах

    Attributes:
        qubit_count (int): Число кубитов
        amplitudes (np.ndarray): 2^n комплексных амплитуд, норма 1
    """
    qubit_count: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = _frozen_copy(self.qubit_count, self.amplitudes)
        norm = float(np.linalg.norm(amplitudes))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"Вектор состояния не нормирован: ||ψ|| = {norm!r}")
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dimension(self) -> int:
        return 1 << self.qubit_count


@dataclass(frozen=True, eq=False)
class TangentVector:
    """
    Ненормированный вектор (касательный вектор или результат H|ψ⟩)

    Attributes:
        qubit_count (int): Число кубитов
        amplitudes (np.ndarray): 2^n конечных комплексных амплитуд
    """
    qubit_count: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = _frozen_copy(self.qubit_count, self.amplitudes)
        if not np.all(np.isfinite(amplitudes)):
            raise ValueError("Касательный вектор содержит нечисловые элементы")
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dimension(self) -> int:
        return 1 << self.qubit_count


def _frozen_copy(qubit_count: int, values) -> np.ndarray:
    amplitudes = np.array(values, dtype=np.complex128).reshape(-1)
    if amplitudes.shape[0] != 1 << qubit_count:
        raise DimensionError(
            f"Ожидалось {1 << qubit_count} амплитуд для {qubit_count} кубитов, получено {amplitudes.shape[0]}"
        )
    amplitudes.setflags(write=False)
    return amplitudes


def _check_qubits(expected: int, actual: int):
    if expected != actual:
        raise DimensionError(f"Число кубитов не совпадает: {expected} и {actual}")


# ============================================================================
# КОНСТРУКТОРЫ
# ============================================================================

def basis_state(qubit_count: int, index: int) -> StateVector:
    """Базисное состояние |index⟩"""
    if not 0 <= index < 1 << qubit_count:
        raise ValueError(f"Индекс {index} вне диапазона для {qubit_count} кубитов")
    amplitudes = np.zeros(1 << qubit_count, dtype=np.complex128)
    amplitudes[index] = 1.0
    return StateVector(qubit_count, amplitudes)


def from_amplitudes(qubit_count: int, values) -> StateVector:
    """Нормирует произвольный ненулевой вектор"""
    amplitudes = np.asarray(values, dtype=np.complex128).reshape(-1)
    norm = float(np.linalg.norm(amplitudes))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("Нельзя нормировать нулевой или нечисловой вектор")
    return StateVector(qubit_count, amplitudes / norm)


def normalized(vector: TangentVector) -> StateVector:
    return from_amplitudes(vector.qubit_count, vector.amplitudes)


def norm(vector) -> float:
    return float(np.linalg.norm(vector.amplitudes))


def popcounts(qubit_count: int) -> np.ndarray:
    """Число единичных битов каждого индекса базиса"""
    index = np.arange(1 << qubit_count, dtype=np.int64)
    counts = np.zeros_like(index)
    for q in range(qubit_count):
        counts += (index >> q) & 1
    return counts


# ============================================================================
# ДЕЙСТВИЕ СТРОК ПАУЛИ
# ============================================================================

@lru_cache(maxsize=8192)
def pauli_action(letters: str):
    """
    P|x⟩ = phase(x)|x ^ flip⟩. Возвращает (source, phase) такие, что
    (P ψ)[k] = phase[k] · ψ[source[k]]
    """
    n = len(letters)
    index = np.arange(1 << n, dtype=np.int64)
    flip = 0
    sign_mask = 0
    y_count = 0
    for q, letter in enumerate(letters):
        if letter in "XY":
            flip |= 1 << q
        if letter in "YZ":
            sign_mask |= 1 << q
        if letter == "Y":
            y_count += 1
    source = index ^ flip
    parity = np.zeros_like(index)
    for q in range(n):
        if sign_mask >> q & 1:
            parity ^= (source >> q) & 1
    # Y|b⟩ = i(-1)^b |1-b⟩, Z|b⟩ = (-1)^b |b⟩
    phase = (1, 1j, -1, -1j)[y_count % 4] * (1 - 2 * parity).astype(np.complex128)
    source.setflags(write=False)
    phase.setflags(write=False)
    return source, phase


def apply_pauli_array(letters: str, amplitudes: np.ndarray) -> np.ndarray:
    """Действие строки Паули на последнюю ось массива (вектор или стопка векторов)"""
    source, phase = pauli_action(letters)
    return phase * amplitudes[..., source]


def apply_rotation_array(letters: str, angle: float, amplitudes: np.ndarray) -> np.ndarray:
    """e^{iθP} на последнюю ось массива: cos θ·ψ + i sin θ·Pψ"""
    return np.cos(angle) * amplitudes + (1j * np.sin(angle)) * apply_pauli_array(letters, amplitudes)


def apply_pauli(term: PauliTerm, state) -> TangentVector:
    """
    coefficient · P|s⟩

    Args:
        term (PauliTerm): Строка Паули с коэффициентом
        state: StateVector или TangentVector

    Returns:
        TangentVector: Результат (для единичного коэффициента норма сохраняется)
    """
    _check_qubits(state.qubit_count, term.qubit_count)
    return TangentVector(
        state.qubit_count,
        term.coefficient * apply_pauli_array(term.letters, state.amplitudes),
    )


def apply_rotation(generator: PauliTerm, angle: float, state: StateVector) -> StateVector:
    """
    e^{iθP}|s⟩ = cos θ·|s⟩ + i sin θ·P|s⟩ (точная двухчленная формула)

    Args:
        generator (PauliTerm): Генератор с единичным коэффициентом
        angle (float): Угол θ (радианы)
        state (StateVector): Состояние

    Returns:
        StateVector: Повёрнутое состояние

    Raises:
        ValueError: Если коэффициент генератора не равен 1
    """
    if abs(generator.coefficient - 1.0) > UNIT_TOLERANCE:
        raise ValueError(
            f"Генератор вращения должен иметь единичный коэффициент, получено {generator.coefficient}"
        )
    _check_qubits(state.qubit_count, generator.qubit_count)
    return StateVector(
        state.qubit_count,
        apply_rotation_array(generator.letters, angle, state.amplitudes),
    )


def apply_sum_array(operator: OperatorSum, amplitudes: np.ndarray) -> np.ndarray:
    """Σ α_i P_i на последнюю ось массива, термы в фиксированном порядке"""
    result = np.zeros_like(amplitudes, dtype=np.complex128)
    for letters in sorted(operator.terms):
        result += operator.terms[letters] * apply_pauli_array(letters, amplitudes)
    return result


def apply_sum(operator: OperatorSum, state) -> TangentVector:
    """
    H|s⟩ почленным применением и накоплением

    Args:
        operator (OperatorSum): Сумма строк Паули
        state: StateVector или TangentVector

    Returns:
        TangentVector: Результат
    """
    _check_qubits(state.qubit_count, operator.qubit_count)
    return TangentVector(state.qubit_count, apply_sum_array(operator, state.amplitudes))


def inner(a, b) -> complex:
    """⟨a|b⟩ с сопряжением левого аргумента"""
    _check_qubits(a.qubit_count, b.qubit_count)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation(operator: OperatorSum, state: StateVector) -> complex:
    """
    ⟨s|H|s⟩; для неэрмитова H может иметь мнимую часть
    """
    return inner(state, apply_sum(operator, state))


def particle_number_moments(state: StateVector) -> tuple:
    """Среднее и дисперсия числа частиц (JW: число единичных битов)"""
    probabilities = np.abs(state.amplitudes) ** 2
    counts = popcounts(state.qubit_count).astype(float)
    mean = float(probabilities @ counts)
    variance = float(probabilities @ (counts - mean) ** 2)
    return mean, variance


# ============================================================================
# ДВОИЧНЫЙ ФОРМАТ
# ============================================================================

def to_bytes(state) -> bytes:
    """
    8-байтовый заголовок (число кубитов, little-endian uint64),
    затем амплитуды как чередующиеся (re, im) little-endian double
    """
    return _HEADER.pack(state.qubit_count) + np.asarray(state.amplitudes, dtype="<c16").tobytes()


def from_bytes(payload: bytes) -> StateVector:
    """Разбор формата to_bytes"""
    if len(payload) < _HEADER.size:
        raise ValueError("Слишком короткий буфер вектора состояния")
    (qubit_count,) = _HEADER.unpack_from(payload)
    body = payload[_HEADER.size:]
    expected = (1 << qubit_count) * 16
    if len(body) != expected:
        raise ValueError(f"Ожидалось {expected} байт амплитуд, получено {len(body)}")
    return StateVector(qubit_count, np.frombuffer(body, dtype="<c16"))
