"""
ansatz.py
=========
Гамильтонов вариационный анзац (HVA) с отдельным параметром на каждую
строку Паули каждого слоя и параметром глобальной фазы;
приготовление невзаимодействующего начального состояния;
состояния и аналитические касательные векторы.

Состояние: ψ(θ) = e^{iθ₀} · Π_{l=1..L} Π_j e^{iθ_{l,j} P_j} |ref⟩,
вращения применяются в порядке схемы: слой 1 первым, внутри слоя
генератор j = 0 первым. Параметр θ_{l,j} имеет индекс 1 + l·G + j.
"""

import logging
from dataclasses import dataclass
import numpy as np
import scipy.linalg
from exceptions import DimensionError
from operator_algebra import PauliTerm
from model import LatticeSpec, HubbardParams, build_hubbard, build_noninteracting, hva_generator_letters
from statevector import (
    StateVector,
    TangentVector,
    apply_pauli_array,
    apply_rotation_array,
)
import oracle

logger = logging.getLogger(__name__)


# ============================================================================
# ПРОГРАММА АНЗАЦА
# ============================================================================

@dataclass(frozen=True, eq=False)
class AnsatzProgram:
    """
    Слоистая последовательность вращений Паули с глобальной фазой

    Attributes:
        reference_state (StateVector): Начальное состояние |ref⟩
        generators (tuple): Генераторы одного слоя (PauliTerm с коэффициентом 1)
        layers (int): Число слоёв L >= 0
    """
    reference_state: StateVector
    generators: tuple
    layers: int

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if self.layers < 0:
            raise ValueError(f"Число слоёв должно быть >= 0, получено {self.layers}")
        for generator in self.generators:
            if generator.qubit_count != self.reference_state.qubit_count:
                raise DimensionError(
                    f"Генератор {generator.letters} не соответствует {self.reference_state.qubit_count} кубитам"
                )
            if abs(generator.coefficient - 1.0) > 1e-12:
                raise ValueError(f"Генератор {generator.letters} должен иметь коэффициент 1")

    @classmethod
    def from_generators(cls, reference_state: StateVector, letters, layers: int) -> "AnsatzProgram":
        """Анзац из произвольного списка строк Паули"""
        return cls(reference_state, tuple(PauliTerm(1.0, item) for item in letters), layers)

    @property
    def qubit_count(self) -> int:
        return self.reference_state.qubit_count

    @property
    def generators_per_layer(self) -> int:
        return len(self.generators)

    @property
    def parameter_count(self) -> int:
        return self.layers * len(self.generators) + 1

    def layer_slice(self, layer: int) -> slice:
        """Индексы параметров слоя layer (нумерация с 0)"""
        start = 1 + layer * len(self.generators)
        return slice(start, start + len(self.generators))

    def zero_parameters(self) -> np.ndarray:
        return np.zeros(self.parameter_count)

    def rotations(self):
        """Пары (индекс параметра, строка Паули) в порядке применения"""
        index = 1
        for _ in range(self.layers):
            for generator in self.generators:
                yield index, generator.letters
                index += 1


def _as_parameters(program: AnsatzProgram, theta) -> np.ndarray:
    values = np.asarray(theta, dtype=float).reshape(-1)
    if values.shape[0] != program.parameter_count:
        raise DimensionError(
            f"Ожидалось {program.parameter_count} параметров, получено {values.shape[0]}"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("Вектор параметров содержит нечисловые элементы")
    return values


# ============================================================================
# ПОСТРОЕНИЕ АНЗАЦА
# ============================================================================

def prepare_initial_state(lat: LatticeSpec, p: HubbardParams, particles: int = None) -> StateVector:
    """
    Наинизшее собственное состояние гамильтониана с U = 0 в секторе числа частиц

    Вырожденный уровень разрешается диагонализацией полного гамильтониана
    внутри вырожденного подпространства; фаза фиксируется по первой
    ненулевой амплитуде.

    Args:
        lat (LatticeSpec): Решётка
        p (HubbardParams): Параметры (U используется для разрешения вырождения)
        particles (int): Число частиц; по умолчанию сектор основного состояния
            полного гамильтониана

    Returns:
        StateVector: Нормированное начальное состояние
    """
    full = build_hubbard(lat, p)
    if particles is None:
        particles, energy = oracle.ground_particle_number(full)
        logger.info(f"Сектор основного состояния {lat.label()}: N={particles}, E={energy:.10f}")
    if not 0 <= particles <= lat.qubit_count:
        raise ValueError(f"Число частиц {particles} вне диапазона [0, {lat.qubit_count}]")

    index = oracle.sector_indices(lat.qubit_count, particles)
    values, vectors = scipy.linalg.eigh(oracle.sector_matrix(build_noninteracting(lat, p), particles))
    degenerate = values - values[0] < oracle.DEGENERACY_TOLERANCE
    subspace = vectors[:, degenerate]
    if subspace.shape[1] > 1:
        logger.info(f"Невзаимодействующий уровень вырожден ({subspace.shape[1]}), разрешаем полным H")
        projected = subspace.conj().T @ oracle.sector_matrix(full, particles) @ subspace
        _, mixing = scipy.linalg.eigh((projected + projected.conj().T) / 2)
        coefficients = subspace @ mixing[:, 0]
    else:
        coefficients = subspace[:, 0]

    amplitudes = np.zeros(1 << lat.qubit_count, dtype=np.complex128)
    amplitudes[index] = coefficients
    amplitudes = oracle.fix_phase(amplitudes)
    return StateVector(lat.qubit_count, amplitudes / np.linalg.norm(amplitudes))


def build_hva(lat: LatticeSpec, p: HubbardParams, layers: int, particles: int = None,
              reference_state: StateVector = None) -> AnsatzProgram:
    """
    HVA из строк Паули немодифицированного гамильтониана Хаббарда

    Args:
        lat (LatticeSpec): Решётка
        p (HubbardParams): Параметры
        layers (int): Число слоёв L >= 0
        particles (int): Сектор начального состояния (по умолчанию из основного состояния)
        reference_state (StateVector): Готовое начальное состояние (иначе prepare_initial_state)

    Returns:
        AnsatzProgram: Анзац с 1 + L·G параметрами
    """
    if layers < 0:
        raise ValueError(f"Число слоёв должно быть >= 0, получено {layers}")
    present = {term.letters for term in build_hubbard(lat, p).non_identity_terms()}
    ordered = [letters for letters in hva_generator_letters(lat) if letters in present]
    missing = present - set(ordered)
    if missing:
        raise ValueError(f"Строки гамильтониана вне порядка анзаца: {sorted(missing)}")
    if reference_state is None:
        reference_state = prepare_initial_state(lat, p, particles)
    program = AnsatzProgram.from_generators(reference_state, ordered, layers)
    logger.info(f"HVA {lat.label()}: {len(ordered)} генераторов на слой, {program.parameter_count} параметров")
    return program


# ============================================================================
# СОСТОЯНИЯ И КАСАТЕЛЬНЫЕ
# ============================================================================

def evaluate_array(program: AnsatzProgram, theta) -> np.ndarray:
    values = _as_parameters(program, theta)
    psi = np.array(program.reference_state.amplitudes)
    for index, letters in program.rotations():
        psi = apply_rotation_array(letters, values[index], psi)
    return np.exp(1j * values[0]) * psi


def evaluate(program: AnsatzProgram, theta) -> StateVector:
    """
    ψ(θ): глобальная фаза, затем слои по порядку

    Args:
        program (AnsatzProgram): Анзац
        theta: Вектор параметров длины parameter_count

    Returns:
        StateVector: Нормированное состояние
    """
    return StateVector(program.qubit_count, evaluate_array(program, theta))


def tangents(program: AnsatzProgram, theta) -> np.ndarray:
    """
    Все аналитические касательные ∂ψ/∂θ_i за один проход схемы

    Строка k: e^{iθ₀}·U_{>k}·(iP_k)·U_{≤k}|ref⟩; строка 0: iψ(θ).
    Уже построенные строки прогоняются через оставшиеся вращения пачкой.

    Returns:
        np.ndarray: Массив parameter_count × 2^n
    """
    values = _as_parameters(program, theta)
    psi = np.array(program.reference_state.amplitudes)
    rows = np.zeros((program.parameter_count, psi.shape[0]), dtype=np.complex128)
    for index, letters in program.rotations():
        angle = values[index]
        psi = apply_rotation_array(letters, angle, psi)
        if index > 1:
            rows[1:index] = apply_rotation_array(letters, angle, rows[1:index])
        rows[index] = 1j * apply_pauli_array(letters, psi)
    phase = np.exp(1j * values[0])
    rows[1:] *= phase
    rows[0] = 1j * phase * psi
    return rows


def tangent(program: AnsatzProgram, theta, i: int) -> TangentVector:
    """
    Аналитическая производная ∂ψ/∂θ_i

    Args:
        program (AnsatzProgram): Анзац
        theta: Параметры
        i (int): Индекс параметра

    Returns:
        TangentVector: Для глобальной фазы i·ψ(θ), для вращения k: схема
        со вставкой iP_k на позиции k

    Raises:
        IndexError: Индекс вне диапазона
    """
    values = _as_parameters(program, theta)
    if not 0 <= i < program.parameter_count:
        raise IndexError(f"Индекс параметра {i} вне диапазона [0, {program.parameter_count})")
    psi = np.array(program.reference_state.amplitudes)
    for index, letters in program.rotations():
        psi = apply_rotation_array(letters, values[index], psi)
        if index == i:
            psi = 1j * apply_pauli_array(letters, psi)
    psi = np.exp(1j * values[0]) * psi
    if i == 0:
        psi = 1j * psi
    return TangentVector(program.qubit_count, psi)


def finite_difference_tangents(program: AnsatzProgram, theta, step: float) -> np.ndarray:
    """Прямые разности (ψ(θ + h·e_i) - ψ(θ)) / h для всех параметров"""
    values = _as_parameters(program, theta)
    base = evaluate_array(program, values)
    rows = np.zeros((program.parameter_count, base.shape[0]), dtype=np.complex128)
    for i in range(program.parameter_count):
        shifted = values.copy()
        shifted[i] += step
        rows[i] = (evaluate_array(program, shifted) - base) / step
    return rows


def perturb_parameters(theta, bound: float, seed: int) -> np.ndarray:
    """
    Сдвиг каждого параметра на независимую равномерную величину из [-bound, bound]

    Генератор: счётчиковый Philox с ключом seed (mod 2^64), поэтому
    результат полностью определяется seed.

    Args:
        theta: Параметры
        bound (float): Граница возмущения (>= 0)
        seed (int): Seed повтора

    Returns:
        np.ndarray: Возмущённые параметры
    """
    if bound < 0:
        raise ValueError(f"Граница возмущения должна быть >= 0, получено {bound}")
    values = np.array(theta, dtype=float).reshape(-1)
    if bound == 0:
        return values
    rng = np.random.Generator(np.random.Philox(key=int(seed) % (1 << 64)))
    return values + rng.uniform(-bound, bound, size=values.shape[0])
