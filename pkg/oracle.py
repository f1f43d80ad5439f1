"""
oracle.py
=========
Точный спектральный эталон: плотные и разреженные матрицы сумм Паули,
спектр, правые/левые основные собственные векторы неэрмитовых операторов,
точность (fidelity) и точная эволюция в мнимом времени.
"""

import math
import logging
from dataclasses import dataclass
import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.csgraph import connected_components
from config import DENSE_QUBIT_CAP
from exceptions import DimensionError, NumericalFailure
from operator_algebra import OperatorSum
from statevector import StateVector, TangentVector, pauli_action, popcounts

logger = logging.getLogger(__name__)

# Жёсткая граница невязки собственных пар
RESIDUAL_BOUND = 1e-8

# Порог вырождения основного уровня
DEGENERACY_TOLERANCE = 1e-8

# Фиксированный seed стартового блока степенного метода
_START_SEED = 20201207


# ============================================================================
# МАТРИЦЫ
# ============================================================================

def sparse_matrix(operator: OperatorSum) -> scipy.sparse.csr_matrix:
    """
    CSR-образ суммы Паули в том же порядке битов, что и statevector

    Args:
        operator (OperatorSum): Сумма строк Паули

    Returns:
        scipy.sparse.csr_matrix: Матрица 2^n × 2^n
    """
    dim = 1 << operator.qubit_count
    rows, cols, data = [], [], []
    index = np.arange(dim, dtype=np.int64)
    for letters in sorted(operator.terms):
        source, phase = pauli_action(letters)
        rows.append(index)
        cols.append(source)
        data.append(operator.terms[letters] * phase)
    if not data:
        return scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
    matrix = scipy.sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    return matrix


def dense_matrix(operator: OperatorSum, qubit_cap: int = None) -> np.ndarray:
    """
    Плотная матрица Σ α_i P_i

    Raises:
        DimensionError: Если число кубитов превышает предел
    """
    cap = DENSE_QUBIT_CAP if qubit_cap is None else qubit_cap
    if operator.qubit_count > cap:
        raise DimensionError(
            f"Плотная матрица на {operator.qubit_count} кубитах превышает предел {cap}"
        )
    return sparse_matrix(operator).toarray()


def similarity_transform(operator: OperatorSum, diagonal: np.ndarray) -> np.ndarray:
    """D⁻¹·H·D для диагональной D, заданной вектором диагонали"""
    matrix = dense_matrix(operator)
    return matrix * diagonal[np.newaxis, :] / diagonal[:, np.newaxis]


# ============================================================================
# СПЕКТР
# ============================================================================

def spectrum(operator: OperatorSum) -> np.ndarray:
    """
    Все собственные значения, поблочно по компонентам связности графа матрицы,
    отсортированные по (Re, Im)
    """
    matrix = sparse_matrix(operator)
    count, labels = connected_components(matrix, directed=True, connection="weak")
    hermitian = operator.is_hermitian()
    values = []
    for component in range(count):
        index = np.flatnonzero(labels == component)
        block = matrix[index][:, index].toarray()
        if hermitian:
            values.append(scipy.linalg.eigvalsh(block).astype(np.complex128))
        else:
            values.append(scipy.linalg.eigvals(block))
    values = np.concatenate(values) if values else np.zeros(0, dtype=np.complex128)
    order = np.lexsort((values.imag, values.real))
    return values[order]


def sector_indices(qubit_count: int, particles: int) -> np.ndarray:
    """Индексы базисных состояний с заданным числом частиц"""
    return np.flatnonzero(popcounts(qubit_count) == particles)


def sector_matrix(operator: OperatorSum, particles: int, matrix=None) -> np.ndarray:
    """
    Плотный блок оператора в секторе числа частиц

    Args:
        operator (OperatorSum): Оператор
        particles (int): Число частиц
        matrix: Готовый sparse_matrix(operator), если уже построен
    """
    if matrix is None:
        matrix = sparse_matrix(operator)
    index = sector_indices(operator.qubit_count, particles)
    return matrix[index][:, index].toarray()


def ground_particle_number(operator: OperatorSum) -> tuple:
    """
    Число частиц основного состояния эрмитова оператора, сохраняющего N.
    При равенстве энергий выбирается сектор ближе к половинному заполнению,
    затем меньшее N.

    Returns:
        tuple: (число частиц, энергия основного состояния)
    """
    n = operator.qubit_count
    matrix = sparse_matrix(operator)
    minima = []
    for particles in range(n + 1):
        block = sector_matrix(operator, particles, matrix)
        minima.append(float(scipy.linalg.eigvalsh(block)[0]))
    best = min(minima)
    candidates = [
        p for p, energy in enumerate(minima) if energy - best < DEGENERACY_TOLERANCE
    ]
    chosen = min(candidates, key=lambda p: (abs(p - n / 2), p))
    logger.debug(f"Минимумы по секторам: {minima}, выбран N={chosen}")
    return chosen, minima[chosen]


# ============================================================================
# ОСНОВНЫЕ СОБСТВЕННЫЕ ПАРЫ
# ============================================================================

@dataclass(frozen=True, eq=False)
class SpectralResult:
    """
    Основная собственная пара оператора

    Attributes:
        eigenvalue (float): Наименьшее (по вещественной части) собственное значение
        right_vector (StateVector): Правый вектор H v = λ v
        left_vector (StateVector): Левый вектор H† w = λ w
        right_residual (float): ||H v - λ v||
        left_residual (float): ||H† w - λ w||
        right_basis (np.ndarray): Ортонормированный базис правого подпространства (k × 2^n)
        left_basis (np.ndarray): То же для левого
    """
    eigenvalue: float
    right_vector: StateVector
    left_vector: StateVector
    right_residual: float
    left_residual: float
    right_basis: np.ndarray
    left_basis: np.ndarray

    @property
    def degeneracy(self) -> int:
        return int(self.right_basis.shape[0])


def fix_phase(vector: np.ndarray) -> np.ndarray:
    """Первая ненулевая амплитуда делается вещественной положительной"""
    magnitudes = np.abs(vector)
    threshold = 1e-8 * float(magnitudes.max()) if magnitudes.size else 0.0
    first = int(np.argmax(magnitudes > threshold))
    return vector * (abs(vector[first]) / vector[first])


def _gershgorin_upper(matrix: scipy.sparse.csr_matrix) -> float:
    """Верхняя граница вещественных частей спектра по кругам Гершгорина"""
    diagonal = matrix.diagonal()
    radii = np.asarray(abs(matrix).sum(axis=1)).ravel() - np.abs(diagonal)
    return float(np.max(diagonal.real + radii))


def _rayleigh_ritz(matrix, block: np.ndarray) -> tuple:
    """Ритцевы значения/векторы, отсортированные по (Re, Im), и их невязки"""
    image = matrix @ block
    values, vectors = scipy.linalg.eig(block.conj().T @ image)
    order = np.lexsort((values.imag, values.real))
    values = values[order]
    ritz = block @ vectors[:, order]
    ritz /= np.linalg.norm(ritz, axis=0, keepdims=True)
    residuals = np.linalg.norm(matrix @ ritz - ritz * values[np.newaxis, :], axis=0)
    return values, ritz, residuals


def _lowest_eigenspace(matrix, block_size: int, tolerance: float, max_iterations: int,
                       check_every: int = 10) -> tuple:
    """
    Блочный степенной метод на (cI - H), где c: граница Гершгорина,
    с уточнением Рэлея-Ритца. Спектр вещественный, поэтому доминирует
    наименьшее собственное значение H.

    Returns:
        tuple: (собственное значение, базис подпространства k × dim, невязки)

    Raises:
        NumericalFailure: Если невязка не опустилась ниже RESIDUAL_BOUND
    """
    dim = matrix.shape[0]
    shift = _gershgorin_upper(matrix) + 1.0
    size = min(block_size, dim)
    while True:
        rng = np.random.default_rng(_START_SEED)
        block = rng.standard_normal((dim, size)) + 1j * rng.standard_normal((dim, size))
        block, _ = np.linalg.qr(block)
        converged = False
        for iteration in range(1, max_iterations + 1):
            block, _ = np.linalg.qr(shift * block - matrix @ block)
            if iteration % check_every and iteration != max_iterations:
                continue
            values, ritz, residuals = _rayleigh_ritz(matrix, block)
            cluster = np.abs(values - values[0]) < DEGENERACY_TOLERANCE
            worst = float(residuals[cluster].max())
            logger.debug(f"Итерация {iteration}: λ0={values[0]:.12f}, невязка {worst:.3e}")
            if worst < tolerance:
                converged = True
                break
        if not converged:
            if worst >= RESIDUAL_BOUND:
                raise NumericalFailure(
                    f"Степенной метод не сошёлся за {max_iterations} итераций (невязка {worst:.3e})"
                )
            logger.warning(f"Невязка {worst:.3e} выше цели {tolerance:.1e}, но в пределах {RESIDUAL_BOUND:.0e}")
        # Вырожденный уровень заполнил блок: расширяем блок
        if cluster.sum() < size or size == dim:
            basis, _ = np.linalg.qr(ritz[:, cluster])
            basis = np.array([fix_phase(column) for column in basis.T])
            return values[0], basis, residuals[cluster]
        size = min(2 * size, dim)
        logger.debug(f"Вырожденность заполнила блок, расширяем до {size}")


def _embed(basis: np.ndarray, index: np.ndarray, dim: int) -> np.ndarray:
    """Строки базиса сектора → векторы полного пространства"""
    full = np.zeros((basis.shape[0], dim), dtype=np.complex128)
    full[:, index] = basis
    return full


def ground_pair(operator: OperatorSum, particles: int = None, block_size: int = 8,
                tolerance: float = 1e-10, max_iterations: int = 20000) -> SpectralResult:
    """
    Правый и левый векторы наименьшего собственного значения

    Args:
        operator (OperatorSum): Оператор с вещественным спектром
        particles (int): Искать только в секторе с этим числом частиц
            (оператор должен сохранять N); None: по всему пространству
        block_size (int): Начальный размер блока
        tolerance (float): Целевая невязка
        max_iterations (int): Предел итераций

    Returns:
        SpectralResult: Собственная пара с невязками

    Raises:
        NumericalFailure: При несходимости или комплексном собственном значении
        ValueError: При недопустимых аргументах
    """
    if max_iterations < 1 or block_size < 1:
        raise ValueError(f"max_iterations и block_size должны быть >= 1, получено {max_iterations}, {block_size}")
    matrix = sparse_matrix(operator)
    adjoint_matrix = matrix.conj().T.tocsr()
    dim = matrix.shape[0]

    search, adjoint_search, index = matrix, adjoint_matrix, None
    if particles is not None:
        if not 0 <= particles <= operator.qubit_count:
            raise ValueError(f"Число частиц {particles} вне диапазона [0, {operator.qubit_count}]")
        index = sector_indices(operator.qubit_count, particles)
        search = matrix[index][:, index].tocsr()
        adjoint_search = adjoint_matrix[index][:, index].tocsr()

    right_value, right_basis, _ = _lowest_eigenspace(search, block_size, tolerance, max_iterations)
    if operator.is_hermitian():
        left_value, left_basis = right_value, right_basis
    else:
        left_value, left_basis, _ = _lowest_eigenspace(adjoint_search, block_size, tolerance, max_iterations)
    if index is not None:
        right_basis = _embed(right_basis, index, dim)
        left_basis = _embed(left_basis, index, dim)

    if abs(right_value.imag) > 1e-6:
        raise NumericalFailure(f"Основное собственное значение комплексное: {right_value}")
    if abs(right_value.imag) > RESIDUAL_BOUND:
        logger.warning(f"Мнимая часть основного собственного значения {right_value.imag:.3e}")
    eigenvalue = float(right_value.real)
    if abs(left_value.real - eigenvalue) > 1e-6:
        raise NumericalFailure(
            f"Левое и правое основные значения различаются: {left_value} и {right_value}"
        )

    right = right_basis[0]
    left = left_basis[0]
    right_residual = float(np.linalg.norm(matrix @ right - eigenvalue * right))
    left_residual = float(np.linalg.norm(adjoint_matrix @ left - eigenvalue * left))
    if right_basis.shape[0] > 1:
        logger.warning(f"Основной уровень вырожден (кратность {right_basis.shape[0]})")
    logger.info(
        f"Основная пара: E0={eigenvalue:.10f}, невязки {right_residual:.2e}/{left_residual:.2e}"
    )
    n = operator.qubit_count
    return SpectralResult(
        eigenvalue=eigenvalue,
        right_vector=StateVector(n, right),
        left_vector=StateVector(n, left),
        right_residual=right_residual,
        left_residual=left_residual,
        right_basis=right_basis,
        left_basis=left_basis,
    )


# ============================================================================
# ТОЧНОСТЬ (FIDELITY)
# ============================================================================

def _amplitudes(value) -> np.ndarray:
    if isinstance(value, (StateVector, TangentVector)):
        return value.amplitudes
    return np.asarray(value, dtype=np.complex128)


def fidelity(a, b) -> float:
    """|⟨a|b⟩|² для нормированных a и b, в [0, 1]"""
    x, y = _amplitudes(a), _amplitudes(b)
    if x.shape != y.shape:
        raise DimensionError(f"Размерности не совпадают: {x.shape} и {y.shape}")
    overlap = abs(np.vdot(x, y)) ** 2 / (np.vdot(x, x).real * np.vdot(y, y).real)
    return float(min(max(overlap, 0.0), 1.0))


def subspace_fidelity(basis: np.ndarray, state) -> float:
    """||P_sub|s⟩||² для ортонормированного базиса (строки basis)"""
    psi = _amplitudes(state)
    projection = basis.conj() @ psi
    value = float(np.vdot(projection, projection).real / np.vdot(psi, psi).real)
    return min(max(value, 0.0), 1.0)


# ============================================================================
# ТОЧНАЯ ЭВОЛЮЦИЯ В МНИМОМ ВРЕМЕНИ
# ============================================================================

def exact_imaginary_time(operator: OperatorSum, state: StateVector, tau: float,
                         max_chunk: float = 1.0) -> StateVector:
    """
    e^{-Hτ}|s⟩ / ||·||

    τ делится на m равных отрезков не длиннее max_chunk; пропагатор отрезка
    строится один раз через scipy.linalg.expm (Паде 13-го порядка с
    масштабированием и возведением в квадрат, обратная ошибка на уровне
    машинной точности), после каждого отрезка вектор перенормируется.

    Args:
        operator (OperatorSum): Гамильтониан
        state (StateVector): Начальное состояние
        tau (float): Мнимое время (>= 0)
        max_chunk (float): Максимальная длина отрезка

    Returns:
        StateVector: Нормированное состояние
    """
    if tau < 0:
        raise ValueError(f"tau должно быть >= 0, получено {tau}")
    if tau == 0:
        return state
    matrix = dense_matrix(operator)
    chunks = max(1, math.ceil(tau / max_chunk))
    propagator = scipy.linalg.expm(-(tau / chunks) * matrix)
    psi = np.array(state.amplitudes)
    for _ in range(chunks):
        psi = propagator @ psi
        psi /= np.linalg.norm(psi)
    return StateVector(state.qubit_count, psi)
