"""
evolution.py
============
Вариационная эволюция в мнимом времени по принципу Маклахлана
для (возможно неэрмитовых) сумм Паули и базовый градиентный спуск.

Уравнение движения: Σ_j A_ij θ̇_j = -C_i,
    A_ij = Re⟨∂_iφ|∂_jφ⟩,  C_i = Re⟨∂_iφ|H|φ⟩,
решается псевдообращением A через SVD, шаг явный, по Эйлеру.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
import numpy as np
import scipy.linalg
from exceptions import ConfigError, DimensionError, NumericalFailure
from operator_algebra import OperatorSum
from model import LatticeSpec, HubbardParams, build_hubbard, build_tc_hubbard
from ansatz import AnsatzProgram, evaluate_array, tangents, finite_difference_tangents
from statevector import apply_sum_array
import oracle

logger = logging.getLogger(__name__)

# Порог расходимости: ||θ̇||·dτ
DIVERGENCE_BOUND = 1e3


class TangentMode(str, Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite_difference"


class Target(str, Enum):
    """Целевой гамильтониан: H' (правый), H'† (левый) или обычный H"""
    RIGHT = "right_tc"
    LEFT = "left_tc"
    REGULAR = "regular"


# ============================================================================
# КОНФИГУРАЦИЯ И ТРАССА
# ============================================================================

@dataclass(frozen=True)
class EvolutionConfig:
    """
    Параметры интегрирования

    Attributes:
        dtau (float): Шаг мнимого времени
        steps (int): Число шагов Эйлера
        svd_cutoff (float): Сингулярные числа A не выше порога отбрасываются
        tangent_mode (TangentMode): Аналитические касательные или конечные разности
        fd_step (float): Шаг конечных разностей
        record_interval (int): Запись каждые record_interval шагов
        target (Target): Целевой гамильтониан
        snapshot_interval (int): Сохранять θ в каждой snapshot_interval-й записи (0: не сохранять)
    """
    dtau: float = 0.01
    steps: int = 500
    svd_cutoff: float = 1e-6
    tangent_mode: TangentMode = TangentMode.ANALYTIC
    fd_step: float = 1e-10
    record_interval: int = 10
    target: Target = Target.RIGHT
    snapshot_interval: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tangent_mode", TangentMode(self.tangent_mode))
        object.__setattr__(self, "target", Target(self.target))
        if not self.dtau > 0:
            raise ConfigError(f"dtau должно быть > 0, получено {self.dtau}", field="dtau")
        if self.steps < 0:
            raise ConfigError(f"steps должно быть >= 0, получено {self.steps}", field="steps")
        if not self.svd_cutoff > 0:
            raise ConfigError(f"svd_cutoff должно быть > 0, получено {self.svd_cutoff}", field="svd_cutoff")
        if not self.fd_step > 0:
            raise ConfigError(f"fd_step должно быть > 0, получено {self.fd_step}", field="fd_step")
        if self.record_interval < 1:
            raise ConfigError(
                f"record_interval должно быть >= 1, получено {self.record_interval}", field="record_interval"
            )
        if self.snapshot_interval < 0:
            raise ConfigError(
                f"snapshot_interval должно быть >= 0, получено {self.snapshot_interval}", field="snapshot_interval"
            )

    def with_steps(self, steps: int) -> "EvolutionConfig":
        return replace(self, steps=steps)


@dataclass(frozen=True, eq=False)
class McLachlanSystem:
    """
    Линейная система одного шага

    Attributes:
        a (np.ndarray): Вещественная симметричная матрица P × P
        c (np.ndarray): Вещественный вектор длины P
        energy (complex): ⟨φ|H|φ⟩ в текущей точке
    """
    a: np.ndarray
    c: np.ndarray
    energy: complex


@dataclass(frozen=True)
class TraceRecord:
    tau: float
    e_real: float
    e_imag: float
    fidelity_right: float = None
    fidelity_left: float = None
    grad_norm: float = 0.0
    a_rank: int = 0
    theta: tuple = None


@dataclass
class EvolutionTrace:
    """
    Записанная траектория эволюции

    Attributes:
        records (list): TraceRecord в порядке возрастания τ
        final_theta (np.ndarray): Параметры после последнего шага
    """
    records: list = field(default_factory=list)
    final_theta: np.ndarray = None

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True, eq=False)
class References:
    """
    Точные собственные подпространства для вычисления верностей

    Attributes:
        right (np.ndarray): Ортонормированный базис правого подпространства (k × 2^n)
        left (np.ndarray): То же для левого (или None)
    """
    right: np.ndarray = None
    left: np.ndarray = None

    @classmethod
    def from_spectral(cls, result: "oracle.SpectralResult") -> "References":
        return cls(right=result.right_basis, left=result.left_basis)


# ============================================================================
# СБОРКА И РЕШЕНИЕ СИСТЕМЫ
# ============================================================================

def assemble(program: AnsatzProgram, theta, operator: OperatorSum,
             mode: TangentMode = TangentMode.ANALYTIC, fd_step: float = 1e-10) -> McLachlanSystem:
    """
    Матрица A, вектор C и энергия E в точке θ

    Args:
        program (AnsatzProgram): Анзац
        theta: Параметры
        operator (OperatorSum): Гамильтониан (H', H'† или H)
        mode (TangentMode): Способ вычисления касательных
        fd_step (float): Шаг конечных разностей

    Returns:
        McLachlanSystem: A = Re(T* Tᵀ), C = Re(T* H|φ⟩), E = ⟨φ|H|φ⟩

    Raises:
        DimensionError: Число кубитов оператора и анзаца различается
        NumericalFailure: Нечисловые элементы A или C
    """
    if operator.qubit_count != program.qubit_count:
        raise DimensionError(
            f"Оператор на {operator.qubit_count} кубитах, анзац на {program.qubit_count}"
        )
    psi = evaluate_array(program, theta)
    if TangentMode(mode) is TangentMode.ANALYTIC:
        rows = tangents(program, theta)
    else:
        rows = finite_difference_tangents(program, theta, fd_step)
    h_psi = apply_sum_array(operator, psi)
    a = (rows.conj() @ rows.T).real
    c = (rows.conj() @ h_psi).real
    energy = complex(np.vdot(psi, h_psi))
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(c)) and np.isfinite(energy)):
        raise NumericalFailure("Нечисловые элементы в системе Маклахлана")
    return McLachlanSystem(a=a, c=c, energy=energy)


def _singular_values(matrix: np.ndarray) -> tuple:
    """SVD через gesdd с запасным gesvd"""
    try:
        return scipy.linalg.svd(matrix, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError):
        logger.debug("gesdd не сошёлся, повтор через gesvd")
    try:
        return scipy.linalg.svd(matrix, lapack_driver="gesvd")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"SVD не сошёлся: {e}")


def _pseudo_solve(a: np.ndarray, c: np.ndarray, svd_cutoff: float) -> tuple:
    symmetric = (a + a.T) / 2
    u, s, vh = _singular_values(symmetric)
    keep = s > svd_cutoff
    inverse = np.zeros_like(s)
    inverse[keep] = 1.0 / s[keep]
    theta_dot = -(vh.T @ (inverse * (u.T @ c)))
    return theta_dot, int(np.count_nonzero(keep))


def solve_update(system: McLachlanSystem, svd_cutoff: float = 1e-6) -> np.ndarray:
    """
    θ̇ = -A⁺C, где A⁺ сохраняет сингулярные числа > svd_cutoff

    Args:
        system (McLachlanSystem): Система шага (A симметризуется)
        svd_cutoff (float): Порог

    Returns:
        np.ndarray: Скорость параметров
    """
    theta_dot, _ = _pseudo_solve(system.a, system.c, svd_cutoff)
    return theta_dot


def numerical_rank(a: np.ndarray, svd_cutoff: float) -> int:
    """Число сингулярных чисел (A + Aᵀ)/2 выше порога"""
    _, s, _ = _singular_values((a + a.T) / 2)
    return int(np.count_nonzero(s > svd_cutoff))


def euler_step(theta, theta_dot, dtau: float) -> np.ndarray:
    """θ + dτ·θ̇"""
    theta = np.asarray(theta, dtype=float)
    theta_dot = np.asarray(theta_dot, dtype=float)
    if theta.shape != theta_dot.shape:
        raise DimensionError(f"Длины θ и θ̇ различаются: {theta.shape} и {theta_dot.shape}")
    return theta + dtau * theta_dot


# ============================================================================
# ИНТЕГРИРОВАНИЕ
# ============================================================================

def _fidelities(psi: np.ndarray, references: References) -> tuple:
    if references is None:
        return None, None
    right = None if references.right is None else oracle.subspace_fidelity(references.right, psi)
    left = None if references.left is None else oracle.subspace_fidelity(references.left, psi)
    return right, left


def _integrate(program: AnsatzProgram, theta0, operator: OperatorSum, cfg: EvolutionConfig,
               references: References, use_metric: bool) -> EvolutionTrace:
    theta = np.array(theta0, dtype=float).reshape(-1)
    if theta.shape[0] != program.parameter_count:
        raise DimensionError(
            f"Ожидалось {program.parameter_count} параметров, получено {theta.shape[0]}"
        )
    trace = EvolutionTrace()
    label = "McLachlan" if use_metric else "градиентный спуск"
    logger.debug(f"Старт ({label}): {program.parameter_count} параметров, {cfg.steps} шагов, dτ={cfg.dtau}")

    for step in range(cfg.steps + 1):
        try:
            system = assemble(program, theta, operator, cfg.tangent_mode, cfg.fd_step)
            if use_metric:
                theta_dot, rank = _pseudo_solve(system.a, system.c, cfg.svd_cutoff)
            else:
                theta_dot, rank = -system.c, numerical_rank(system.a, cfg.svd_cutoff)
        except NumericalFailure as e:
            trace.final_theta = theta
            raise NumericalFailure(f"Шаг {step}: {e}", trace=trace) from e

        if step % cfg.record_interval == 0 or step == cfg.steps:
            fid_right, fid_left = _fidelities(evaluate_array(program, theta), references)
            index = len(trace.records)
            snapshot = None
            if cfg.snapshot_interval and index % cfg.snapshot_interval == 0:
                snapshot = tuple(float(x) for x in theta)
            record = TraceRecord(
                tau=step * cfg.dtau,
                e_real=system.energy.real,
                e_imag=system.energy.imag,
                fidelity_right=fid_right,
                fidelity_left=fid_left,
                grad_norm=float(np.linalg.norm(system.c)),
                a_rank=rank,
                theta=snapshot,
            )
            trace.records.append(record)
            logger.debug(
                f"τ={record.tau:.4f} E={record.e_real:.10f}{record.e_imag:+.3e}i "
                f"rank={rank} |C|={record.grad_norm:.3e}"
            )
        if step == cfg.steps:
            break

        increment = float(np.linalg.norm(theta_dot)) * cfg.dtau
        if not np.isfinite(increment) or increment > DIVERGENCE_BOUND:
            trace.final_theta = theta
            raise NumericalFailure(
                f"Расходимость на шаге {step}: ||θ̇||·dτ = {increment:.3e}", trace=trace
            )
        theta = euler_step(theta, theta_dot, cfg.dtau)

    trace.final_theta = theta
    return trace


def evolve(program: AnsatzProgram, theta0, operator: OperatorSum, cfg: EvolutionConfig,
           references: References = None) -> EvolutionTrace:
    """
    Вариационная эволюция в мнимом времени: assemble → solve_update → euler_step

    Записи делаются при τ = 0, каждые record_interval шагов и после последнего шага.

    Args:
        program (AnsatzProgram): Анзац
        theta0: Начальные параметры
        operator (OperatorSum): Гамильтониан
        cfg (EvolutionConfig): Параметры интегрирования
        references (References): Точные подпространства для верностей (необязательно)

    Returns:
        EvolutionTrace: Траектория

    Raises:
        NumericalFailure: С частичной траекторией в поле trace
    """
    return _integrate(program, theta0, operator, cfg, references, use_metric=True)


def gradient_descent(program: AnsatzProgram, theta0, operator: OperatorSum, cfg: EvolutionConfig,
                     references: References = None) -> EvolutionTrace:
    """Тот же цикл с A = I (θ̇ = -C, шаг dτ)"""
    return _integrate(program, theta0, operator, cfg, references, use_metric=False)


# ============================================================================
# ЦЕЛИ И НЕВЯЗКИ
# ============================================================================

def target_hamiltonian(lat: LatticeSpec, p: HubbardParams, target: Target) -> OperatorSum:
    """right_tc → H'(J), left_tc → H'(J)†, regular → H"""
    target = Target(target)
    if target is Target.REGULAR:
        return build_hubbard(lat, p)
    operator = build_tc_hubbard(lat, p)
    return operator.adjoint() if target is Target.LEFT else operator


def energy_residuals(trace: EvolutionTrace, e0: float) -> tuple:
    """(|Re E - E₀|, |Im E|) в последней записи"""
    final = trace.final
    return abs(final.e_real - e0), abs(final.e_imag)
