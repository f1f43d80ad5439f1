"""
experiments.py
==============
Численные эксперименты: одиночный запуск, развёртка по глубине анзаца
с сравнением методов, сравнение целевых состояний и подбор J.

Повторы и точки сетки J являются независимыми заданиями; они выполняются пулом
процессов (ProcessPoolExecutor), результаты упорядочиваются
по ключу задания, поэтому вывод не зависит от порядка завершения.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from enum import Enum
import numpy as np
from exceptions import NumericalFailure
from model import LatticeSpec, HubbardParams, build_hubbard
from ansatz import build_hva, perturb_parameters, prepare_initial_state
from evolution import (
    EvolutionConfig,
    EvolutionTrace,
    References,
    Target,
    energy_residuals,
    evolve,
    gradient_descent,
    target_hamiltonian,
)
from statevector import StateVector, apply_sum_array
import oracle

logger = logging.getLogger(__name__)

TargetState = Target


class Method(str, Enum):
    IMAGINARY_TIME = "imaginary_time"
    GRADIENT_DESCENT = "gradient_descent"
    # строка глубины 0: невозмущённое начальное состояние
    INITIAL_STATE = "initial_state"


# ============================================================================
# ОПИСАНИЕ ЭКСПЕРИМЕНТА И РЕЗУЛЬТАТЫ
# ============================================================================

@dataclass(frozen=True)
class ExperimentSpec:
    """
    Описание эксперимента

    Attributes:
        lattice (LatticeSpec): Решётка
        params (HubbardParams): Параметры модели
        layers_list (tuple): Глубины анзаца
        repetitions (int): Число повторов с разными seed
        methods (tuple): Методы (Method)
        targets (tuple): Целевые состояния (TargetState)
        evolution (EvolutionConfig): Параметры интегрирования
        seed_base (int): Seed повтора r равен seed_base + r
        perturb_bound (float): Граница возмущения начальных параметров
        particles (int): Сектор числа частиц (None: из основного состояния)
        workers (int): Размер пула процессов
    """
    lattice: LatticeSpec
    params: HubbardParams
    layers_list: tuple = (0, 1, 2, 3)
    repetitions: int = 10
    methods: tuple = (Method.IMAGINARY_TIME, Method.GRADIENT_DESCENT)
    targets: tuple = (TargetState.RIGHT,)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    seed_base: int = 0
    perturb_bound: float = 0.02 * math.pi
    particles: int = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "layers_list", tuple(int(x) for x in self.layers_list))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        object.__setattr__(self, "targets", tuple(TargetState(t) for t in self.targets))
        if self.repetitions < 1:
            raise ValueError(f"Число повторов должно быть >= 1, получено {self.repetitions}")
        if not self.layers_list or min(self.layers_list) < 0:
            raise ValueError(f"Некорректный список глубин: {self.layers_list}")
        if not self.methods:
            raise ValueError("Список методов пуст")
        if not self.targets:
            raise ValueError("Список целей пуст")
        if self.workers < 1:
            raise ValueError(f"Размер пула должен быть >= 1, получено {self.workers}")

    def seeds(self) -> list:
        return [self.seed_base + r for r in range(self.repetitions)]


@dataclass(frozen=True)
class SweepRow:
    """
    Агрегированная строка развёртки

    Attributes:
        layers (int): Глубина
        method (Method): Метод
        target (TargetState): Цель
        mean_fidelity (float): Средняя итоговая верность (None, если все повторы упали)
        stderr_fidelity (float): Выборочное ст. отклонение / √n
        mean_abs_re_residual (float): Среднее |Re E - E₀|
        mean_abs_im_residual (float): Среднее |Im E| (None для глубины 0)
        seeds (tuple): Seed успешных повторов
        failures (tuple): Пары (seed, сообщение) упавших повторов
        fidelities (tuple): Итоговые верности успешных повторов
    """
    layers: int
    method: Method
    target: TargetState
    mean_fidelity: float
    stderr_fidelity: float
    mean_abs_re_residual: float
    mean_abs_im_residual: float
    seeds: tuple = ()
    failures: tuple = ()
    fidelities: tuple = ()


@dataclass
class SweepResult:
    rows: list
    ground_energy: float

    def row(self, layers: int, method, target) -> SweepRow:
        method, target = Method(method), TargetState(target)
        for row in self.rows:
            if row.layers == layers and row.method is method and row.target is target:
                return row
        raise KeyError(f"Нет строки ({layers}, {method.value}, {target.value})")

    def failures(self) -> list:
        return [(row.layers, row.method.value, row.target.value, seed, message)
                for row in self.rows for seed, message in row.failures]


@dataclass(frozen=True)
class JScanRow:
    j: float
    mean_fidelity: float
    stderr_fidelity: float
    seeds: tuple = ()
    failures: tuple = ()


# ============================================================================
# ЗАДАНИЯ ПУЛА
# ============================================================================

@dataclass(frozen=True, eq=False)
class Job:
    """Одна эволюция; всё нужное передаётся явно (задание сериализуется в процесс пула)"""
    lattice: LatticeSpec
    params: HubbardParams
    layers: int
    method: Method
    target: TargetState
    seed: int
    evolution: EvolutionConfig
    perturb_bound: float
    reference_state: StateVector
    right_basis: np.ndarray
    left_basis: np.ndarray
    ground_energy: float

    @property
    def key(self) -> tuple:
        return (self.params.j, self.layers, self.method.value, self.target.value, self.seed)


@dataclass
class JobResult:
    job: Job
    trace: EvolutionTrace
    fidelity: float = None
    re_residual: float = None
    im_residual: float = None
    error: str = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _execute(job: Job) -> JobResult:
    """Выполняет задание; NumericalFailure пробрасывается"""
    program = build_hva(job.lattice, job.params, job.layers, reference_state=job.reference_state)
    operator = target_hamiltonian(job.lattice, job.params, job.target)
    theta0 = perturb_parameters(program.zero_parameters(), job.perturb_bound, job.seed)
    cfg = replace(job.evolution, target=job.target)
    references = References(right=job.right_basis, left=job.left_basis)
    run = evolve if job.method is Method.IMAGINARY_TIME else gradient_descent
    trace = run(program, theta0, operator, cfg, references)
    re_residual, im_residual = energy_residuals(trace, job.ground_energy)
    return JobResult(
        job=job,
        trace=trace,
        fidelity=trace.final.fidelity_right,
        re_residual=re_residual,
        im_residual=im_residual,
    )


def _run_job(job: Job) -> JobResult:
    """Точка входа процесса пула: ошибки превращаются в результат с error"""
    try:
        return _execute(job)
    except NumericalFailure as e:
        partial = e.trace if e.trace is not None else EvolutionTrace()
        return JobResult(job=job, trace=partial, error=str(e))


def _pool_jobs(jobs: list, workers: int, on_trace) -> list:
    results = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending = [pool.submit(_run_job, job) for job in jobs]
        for future in as_completed(pending):
            result = future.result()
            _report(result, on_trace)
            results.append(result)
    return results


def _report(result: JobResult, on_trace):
    job = result.job
    if result.ok:
        logger.info(
            f"Готово L={job.layers} {job.method.value} {job.target.value} J={job.params.j} "
            f"seed={job.seed}: F={result.fidelity:.6f}"
        )
    else:
        logger.warning(
            f"Повтор L={job.layers} {job.method.value} {job.target.value} J={job.params.j} "
            f"seed={job.seed} исключён: {result.error}"
        )
    if on_trace is not None:
        on_trace(result)


def run_jobs(jobs: list, workers: int = 1, on_trace=None) -> list:
    """
    Выполняет задания и возвращает результаты в порядке ключей

    Args:
        jobs (list): Задания
        workers (int): Размер пула (1: в текущем процессе)
        on_trace: Вызывается для каждого завершённого задания

    Returns:
        list: JobResult, отсортированные по Job.key
    """
    if workers <= 1 or len(jobs) <= 1:
        results = []
        for job in jobs:
            result = _run_job(job)
            _report(result, on_trace)
            results.append(result)
    else:
        results = _pool_jobs(jobs, min(workers, len(jobs)), on_trace)
    return sorted(results, key=lambda r: r.job.key)


# ============================================================================
# ПОДГОТОВКА
# ============================================================================

@dataclass(frozen=True, eq=False)
class _Context:
    reference_state: StateVector
    spectra: dict
    ground_energy: float
    particles: int


def resolve_particles(lat: LatticeSpec, params: HubbardParams, particles: int = None) -> int:
    """Заданный сектор или сектор основного состояния H"""
    if particles is not None:
        return particles
    particles, energy = oracle.ground_particle_number(build_hubbard(lat, params))
    logger.info(f"Сектор основного состояния {lat.label()}: N={particles}, E={energy:.10f}")
    return particles


def _prepare(spec: ExperimentSpec, targets) -> _Context:
    """
    Начальное состояние и точные подпространства каждой цели.
    Анзац сохраняет N, поэтому эталоны ищутся в секторе начального состояния.
    """
    particles = resolve_particles(spec.lattice, spec.params, spec.particles)
    reference = prepare_initial_state(spec.lattice, spec.params, particles)
    spectra = {}
    for target in targets:
        target = TargetState(target)
        spectra[target] = oracle.ground_pair(
            target_hamiltonian(spec.lattice, spec.params, target), particles=particles
        )
        if spectra[target].degeneracy > 1:
            logger.warning(
                f"Основное подпространство {target.value} вырождено ({spectra[target].degeneracy}), "
                f"верность считается по проекции"
            )
    energy = next(iter(spectra.values())).eigenvalue
    return _Context(reference_state=reference, spectra=spectra, ground_energy=energy, particles=particles)


def _plan(spec: ExperimentSpec, context: _Context, methods, targets, layers_list) -> list:
    jobs = []
    for target in targets:
        spectral = context.spectra[TargetState(target)]
        for layers in layers_list:
            if layers == 0:
                continue
            for method in methods:
                for seed in spec.seeds():
                    jobs.append(Job(
                        lattice=spec.lattice,
                        params=spec.params,
                        layers=layers,
                        method=Method(method),
                        target=TargetState(target),
                        seed=seed,
                        evolution=spec.evolution,
                        perturb_bound=spec.perturb_bound,
                        reference_state=context.reference_state,
                        right_basis=spectral.right_basis,
                        left_basis=spectral.left_basis,
                        ground_energy=context.ground_energy,
                    ))
    return jobs


def _initial_row(spec: ExperimentSpec, context: _Context, target) -> SweepRow:
    """Глубина 0: невозмущённое начальное состояние, мнимая часть не учитывается"""
    target = TargetState(target)
    psi = np.array(context.reference_state.amplitudes)
    operator = target_hamiltonian(spec.lattice, spec.params, target)
    energy = complex(np.vdot(psi, apply_sum_array(operator, psi)))
    fidelity = oracle.subspace_fidelity(context.spectra[target].right_basis, psi)
    return SweepRow(
        layers=0,
        method=Method.INITIAL_STATE,
        target=target,
        mean_fidelity=fidelity,
        stderr_fidelity=0.0,
        mean_abs_re_residual=abs(energy.real - context.ground_energy),
        mean_abs_im_residual=None,
        fidelities=(fidelity,),
    )


def _mean_and_stderr(values: list) -> tuple:
    if not values:
        return None, None
    array = np.asarray(values, dtype=float)
    if array.shape[0] == 1:
        return float(array[0]), 0.0
    return float(array.mean()), float(array.std(ddof=1) / math.sqrt(array.shape[0]))


def _aggregate(layers: int, method, target, results: list) -> SweepRow:
    done = [r for r in results if r.ok]
    mean_fid, stderr_fid = _mean_and_stderr([r.fidelity for r in done])
    mean_re, _ = _mean_and_stderr([r.re_residual for r in done])
    mean_im, _ = _mean_and_stderr([r.im_residual for r in done])
    return SweepRow(
        layers=layers,
        method=Method(method),
        target=TargetState(target),
        mean_fidelity=mean_fid,
        stderr_fidelity=stderr_fid,
        mean_abs_re_residual=mean_re,
        mean_abs_im_residual=mean_im,
        seeds=tuple(r.job.seed for r in done),
        failures=tuple((r.job.seed, r.error) for r in results if not r.ok),
        fidelities=tuple(r.fidelity for r in done),
    )


def _sweep(spec: ExperimentSpec, methods, targets, on_trace) -> SweepResult:
    context = _prepare(spec, targets)
    results = run_jobs(_plan(spec, context, methods, targets, spec.layers_list), spec.workers, on_trace)
    rows = []
    for layers in sorted(set(spec.layers_list)):
        for target in targets:
            if layers == 0:
                rows.append(_initial_row(spec, context, target))
                continue
            for method in methods:
                group = [r for r in results if r.job.layers == layers
                         and r.job.method is Method(method) and r.job.target is TargetState(target)]
                rows.append(_aggregate(layers, method, target, group))
    return SweepResult(rows=rows, ground_energy=context.ground_energy)


# ============================================================================
# ОПЕРАЦИИ
# ============================================================================

def run_single(spec: ExperimentSpec, on_trace=None) -> EvolutionTrace:
    """
    Один запуск: первая глубина, первый метод, первая цель, seed = seed_base

    Верности в трассе считаются относительно правого и левого основных
    векторов эволюционируемого оператора.

    Raises:
        NumericalFailure: С частичной траекторией
    """
    target = spec.targets[0]
    context = _prepare(spec, (target,))
    layers = spec.layers_list[0]
    method = spec.methods[0]
    if method is Method.INITIAL_STATE:
        raise ValueError("Метод initial_state не запускает эволюцию")
    spectral = context.spectra[target]
    job = Job(
        lattice=spec.lattice,
        params=spec.params,
        layers=layers,
        method=method,
        target=target,
        seed=spec.seed_base,
        evolution=spec.evolution,
        perturb_bound=spec.perturb_bound,
        reference_state=context.reference_state,
        right_basis=spectral.right_basis,
        left_basis=spectral.left_basis,
        ground_energy=context.ground_energy,
    )
    logger.info(f"Одиночный запуск {spec.lattice.label()} J={spec.params.j} L={layers} seed={job.seed}")
    result = _execute(job)
    if on_trace is not None:
        on_trace(result)
    return result.trace


def run_depth_sweep(spec: ExperimentSpec, on_trace=None) -> SweepResult:
    """
    Развёртка по глубине: для каждой (глубины, метода, цели) repetitions
    возмущённых запусков; строка глубины 0 описывает начальное состояние
    """
    logger.info(
        f"Развёртка {spec.lattice.label()} J={spec.params.j} L={list(spec.layers_list)} "
        f"методы={[m.value for m in spec.methods]} повторов={spec.repetitions}"
    )
    return _sweep(spec, spec.methods, spec.targets, on_trace)


def run_target_comparison(spec: ExperimentSpec, on_trace=None) -> SweepResult:
    """
    Сравнение целей: эволюция в мнимом времени под H' (right_tc), H'† (left_tc)
    или H (regular); верность считается с основным вектором своего оператора
    """
    logger.info(
        f"Сравнение целей {spec.lattice.label()} J={spec.params.j} "
        f"цели={[t.value for t in spec.targets]} повторов={spec.repetitions}"
    )
    return _sweep(spec, (Method.IMAGINARY_TIME,), spec.targets, on_trace)


def scan_j(lat: LatticeSpec, params: HubbardParams, layers: int, j_grid, repetitions: int = 10,
           evolution: EvolutionConfig = None, seed_base: int = 0, perturb_bound: float = 0.02 * math.pi,
           particles: int = None, workers: int = 1, on_trace=None) -> list:
    """
    Средняя итоговая верность с правым TC-вектором для каждого J сетки

    Все точки сетки используют одни и те же seed; задания всех точек
    выполняются одним пулом.

    Returns:
        list: JScanRow в порядке сетки
    """
    grid = [float(j) for j in j_grid]
    if not grid:
        raise ValueError("Сетка J пуста")
    evolution = evolution or EvolutionConfig()
    jobs = []
    initial = {}
    for j in grid:
        spec = ExperimentSpec(
            lattice=lat,
            params=params.with_j(j),
            layers_list=(layers,),
            repetitions=repetitions,
            methods=(Method.IMAGINARY_TIME,),
            targets=(TargetState.RIGHT,),
            evolution=evolution,
            seed_base=seed_base,
            perturb_bound=perturb_bound,
            particles=particles,
            workers=workers,
        )
        context = _prepare(spec, spec.targets)
        if layers == 0:
            initial[j] = _initial_row(spec, context, TargetState.RIGHT)
        else:
            jobs.extend(_plan(spec, context, spec.methods, spec.targets, spec.layers_list))
            logger.info(f"J={j}: запланировано {repetitions} повторов")

    results = run_jobs(jobs, workers, on_trace)
    rows = []
    for j in grid:
        if layers == 0:
            aggregated = initial[j]
        else:
            group = [r for r in results if r.job.params.j == j]
            aggregated = _aggregate(layers, Method.IMAGINARY_TIME, TargetState.RIGHT, group)
        rows.append(JScanRow(
            j=j,
            mean_fidelity=aggregated.mean_fidelity,
            stderr_fidelity=aggregated.stderr_fidelity,
            seeds=aggregated.seeds,
            failures=aggregated.failures,
        ))
    return rows


def best_j(rows: list) -> float:
    """J с наибольшей средней верностью; при равенстве меньший |J|"""
    candidates = [row for row in rows if row.mean_fidelity is not None]
    if not candidates:
        raise NumericalFailure("Все точки сетки J завершились ошибкой")
    best = max(candidates, key=lambda row: (round(row.mean_fidelity, 12), -abs(row.j)))
    return best.j


def optimize_j(lat: LatticeSpec, params: HubbardParams, layers: int, j_grid, **kwargs) -> float:
    """
    Подбор J по сетке

    Args:
        lat (LatticeSpec): Решётка
        params (HubbardParams): Параметры (J игнорируется)
        layers (int): Глубина анзаца
        j_grid: Непустая сетка
        **kwargs: repetitions, evolution, seed_base, perturb_bound, particles, workers, on_trace

    Returns:
        float: Оптимальное J
    """
    rows = scan_j(lat, params, layers, j_grid, **kwargs)
    j = best_j(rows)
    logger.info(f"Оптимальное J={j} для {lat.label()} L={layers}")
    return j


def initial_fidelity(lat: LatticeSpec, params: HubbardParams, particles: int = None) -> float:
    """Верность невзаимодействующего начального состояния с основным подпространством H"""
    particles = resolve_particles(lat, params, particles)
    reference = prepare_initial_state(lat, params, particles)
    result = oracle.ground_pair(build_hubbard(lat, params), particles=particles)
    return oracle.subspace_fidelity(result.right_basis, reference)
