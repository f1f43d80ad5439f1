"""
model.py
========
Гамильтониан Ферми-Хаббарда, его транскоррелированная (TC) версия
с преобразованием Гутцвиллера и невзаимодействующий гамильтониан.

Индексация спин-орбиталей: мода = 2·узел + спин (↑ = 0, ↓ = 1),
узлы нумеруются построчно. Граничные условия только открытые.
"""

import math
import logging
from dataclasses import dataclass
import numpy as np
from operator_algebra import (
    OperatorSum,
    FermionSum,
    PauliTerm,
    jordan_wigner,
    ladder,
    number_operator,
    fermion_identity,
)

logger = logging.getLogger(__name__)

SPIN_UP = 0
SPIN_DOWN = 1


# ============================================================================
# РЕШЁТКА И ПАРАМЕТРЫ
# ============================================================================

@dataclass(frozen=True)
class LatticeSpec:
    """
    Прямоугольная решётка rows × cols с открытыми границами

    Attributes:
        rows (int): Число строк (>= 1)
        cols (int): Число столбцов (>= 1)
        boundary (str): Тип границ, поддерживается только "open"
    """
    rows: int
    cols: int
    boundary: str = "open"

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"Размеры решётки должны быть >= 1, получено {self.rows}x{self.cols}")
        if self.boundary != "open":
            raise ValueError(f"Поддерживаются только открытые границы, получено {self.boundary!r}")

    @property
    def sites(self) -> int:
        return self.rows * self.cols

    @property
    def qubit_count(self) -> int:
        return 2 * self.sites

    def site(self, row: int, col: int) -> int:
        return row * self.cols + col

    def mode(self, site: int, spin: int) -> int:
        return 2 * site + spin

    def edges(self) -> list:
        """
        Пары ближайших соседей (i, j), i < j, каждая ровно один раз,
        в порядке возрастания (i, j)
        """
        pairs = []
        for row in range(self.rows):
            for col in range(self.cols):
                i = self.site(row, col)
                if col + 1 < self.cols:
                    pairs.append((i, self.site(row, col + 1)))
                if row + 1 < self.rows:
                    pairs.append((i, self.site(row + 1, col)))
        return sorted(pairs)

    def label(self) -> str:
        return f"{self.rows}x{self.cols}"


@dataclass(frozen=True)
class HubbardParams:
    """
    Параметры модели

    Attributes:
        t (float): Амплитуда перескока
        u (float): Отталкивание на узле
        j (float): Сила преобразования Гутцвиллера (J = 0: без преобразования)
    """
    t: float = 1.0
    u: float = 4.0
    j: float = 0.0

    def __post_init__(self):
        for name in ("t", "u", "j"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"Параметр {name} должен быть конечным, получено {value}")

    def with_u(self, u: float) -> "HubbardParams":
        return HubbardParams(t=self.t, u=u, j=self.j)

    def with_j(self, j: float) -> "HubbardParams":
        return HubbardParams(t=self.t, u=self.u, j=j)


# ============================================================================
# ФЕРМИОННЫЕ СУММЫ
# ============================================================================

def _hop(lat: LatticeSpec, i: int, j: int, spin: int) -> FermionSum:
    """a†_{iσ} a_{jσ}"""
    n = lat.qubit_count
    return ladder(n, lat.mode(i, spin), True) * ladder(n, lat.mode(j, spin), False)


def _n(lat: LatticeSpec, site: int, spin: int) -> FermionSum:
    return number_operator(lat.qubit_count, lat.mode(site, spin))


def hubbard_fermion_sum(lat: LatticeSpec, p: HubbardParams) -> FermionSum:
    """
    H_FH = -t Σ_{<i,j>,σ} (a†_{iσ} a_{jσ} + a†_{jσ} a_{iσ}) + U Σ_i n_{i↑} n_{i↓}
    """
    total = FermionSum(lat.qubit_count)
    for i, j in lat.edges():
        for spin in (SPIN_UP, SPIN_DOWN):
            total = total + (_hop(lat, i, j, spin) + _hop(lat, j, i, spin)).scaled(-p.t)
    for site in range(lat.sites):
        total = total + (_n(lat, site, SPIN_UP) * _n(lat, site, SPIN_DOWN)).scaled(p.u)
    return total


def tc_correction_fermion_sum(lat: LatticeSpec, p: HubbardParams) -> FermionSum:
    """
    Поправка TC: -t Σ_{(i→j),σ} a†_{iσ} a_{jσ} [(e^J-1) n_{jσ̄} + (e^{-J}-1) n_{iσ̄}
    - 2(cosh J - 1) n_{iσ̄} n_{jσ̄}] по обоим направлениям каждого ребра
    """
    forward = math.exp(p.j) - 1.0
    backward = math.exp(-p.j) - 1.0
    both = -2.0 * (math.cosh(p.j) - 1.0)
    total = FermionSum(lat.qubit_count)
    for a, b in lat.edges():
        for i, j in ((a, b), (b, a)):
            for spin in (SPIN_UP, SPIN_DOWN):
                opposite = 1 - spin
                bracket = (
                    _n(lat, j, opposite).scaled(forward)
                    + _n(lat, i, opposite).scaled(backward)
                    + (_n(lat, i, opposite) * _n(lat, j, opposite)).scaled(both)
                )
                total = total + (_hop(lat, i, j, spin) * bracket).scaled(-p.t)
    return total


def tc_hubbard_fermion_sum(lat: LatticeSpec, p: HubbardParams) -> FermionSum:
    return hubbard_fermion_sum(lat, p) + tc_correction_fermion_sum(lat, p)


# ============================================================================
# КУБИТНЫЕ ГАМИЛЬТОНИАНЫ
# ============================================================================

def build_hubbard(lat: LatticeSpec, p: HubbardParams) -> OperatorSum:
    """
    JW-образ гамильтониана Хаббарда (эрмитов, с тождественным термом U·sites/4)

    Args:
        lat (LatticeSpec): Решётка
        p (HubbardParams): Параметры (J не используется)

    Returns:
        OperatorSum: Гамильтониан на 2·sites кубитах
    """
    return jordan_wigner(hubbard_fermion_sum(lat, p))


def build_tc_hubbard(lat: LatticeSpec, p: HubbardParams) -> OperatorSum:
    """
    JW-образ TC-гамильтониана H' = e^{-JG} H e^{JG}, G = Σ_i n_{i↑} n_{i↓}.
    При J = 0 совпадает с build_hubbard термин в термин.

    Args:
        lat (LatticeSpec): Решётка
        p (HubbardParams): Параметры

    Returns:
        OperatorSum: Неэрмитов при J != 0
    """
    operator = jordan_wigner(tc_hubbard_fermion_sum(lat, p))
    logger.debug(f"TC-гамильтониан {lat.label()} J={p.j}: {len(operator)} термов")
    return operator


def build_noninteracting(lat: LatticeSpec, p: HubbardParams) -> OperatorSum:
    """build_hubbard с U = 0"""
    return build_hubbard(lat, p.with_u(0.0))


def gutzwiller_generator(lat: LatticeSpec) -> OperatorSum:
    """JW-образ Σ_i n_{i↑} n_{i↓}; содержит только буквы I/Z"""
    total = FermionSum(lat.qubit_count)
    for site in range(lat.sites):
        total = total + _n(lat, site, SPIN_UP) * _n(lat, site, SPIN_DOWN)
    return jordan_wigner(total)


def number_operator_sum(lat: LatticeSpec) -> OperatorSum:
    """JW-образ оператора числа частиц N = Σ_p n_p"""
    total = FermionSum(lat.qubit_count)
    for mode in range(lat.qubit_count):
        total = total + number_operator(lat.qubit_count, mode)
    return jordan_wigner(total)


def spin_z_sum(lat: LatticeSpec) -> OperatorSum:
    """JW-образ S_z = ½ Σ_i (n_{i↑} - n_{i↓})"""
    total = FermionSum(lat.qubit_count)
    for site in range(lat.sites):
        total = total + _n(lat, site, SPIN_UP).scaled(0.5) + _n(lat, site, SPIN_DOWN).scaled(-0.5)
    return jordan_wigner(total)


def gutzwiller_diagonal(lat: LatticeSpec, j: float) -> np.ndarray:
    """
    Диагональ D = exp(J Σ_i n_{i↑} n_{i↓}) в вычислительном базисе
    (кубит 0: младший бит индекса)

    Args:
        lat (LatticeSpec): Решётка
        j (float): Сила преобразования

    Returns:
        np.ndarray: Вектор длины 2^(2·sites)
    """
    index = np.arange(1 << lat.qubit_count, dtype=np.int64)
    doubles = np.zeros_like(index)
    for site in range(lat.sites):
        up = (index >> lat.mode(site, SPIN_UP)) & 1
        down = (index >> lat.mode(site, SPIN_DOWN)) & 1
        doubles += up & down
    return np.exp(j * doubles.astype(float))


# ============================================================================
# ГЕНЕРАТОРЫ АНЗАЦА
# ============================================================================

def hva_generator_letters(lat: LatticeSpec) -> list:
    """
    Строки Паули гамильтониана Хаббарда в порядке анзаца:
    перескоки (рёбра по порядку, спин ↑ затем ↓, X-строка перед Y-строкой),
    затем взаимодействие (узлы по порядку: Z_↑, Z_↓, Z_↑Z_↓)

    Returns:
        list: Строки letters без коэффициентов
    """
    n = lat.qubit_count
    ordered = []
    for i, j in lat.edges():
        for spin in (SPIN_UP, SPIN_DOWN):
            p, q = lat.mode(i, spin), lat.mode(j, spin)
            string = {k: "Z" for k in range(p + 1, q)}
            for letter in ("X", "Y"):
                ordered.append(PauliTerm.from_sparse(n, {**string, p: letter, q: letter}).letters)
    for site in range(lat.sites):
        up, down = lat.mode(site, SPIN_UP), lat.mode(site, SPIN_DOWN)
        ordered.append(PauliTerm.from_sparse(n, {up: "Z"}).letters)
        ordered.append(PauliTerm.from_sparse(n, {down: "Z"}).letters)
        ordered.append(PauliTerm.from_sparse(n, {up: "Z", down: "Z"}).letters)
    return ordered
