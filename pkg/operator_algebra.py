"""
operator_algebra.py
===================
Алгебра строк Паули и фермионных операторов, преобразование Йордана-Вигнера.

Соглашения:
    - буква в позиции q строки letters действует на кубит q;
    - фаза произведения хранится в коэффициенте, letters всегда из {I, X, Y, Z};
    - OperatorSum всегда упрощён: один ключ на строку, коэффициенты ниже допуска удалены.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping
from exceptions import DimensionError

logger = logging.getLogger(__name__)

# Допуск отбрасывания коэффициентов по умолчанию
DROP_TOLERANCE = 1e-12

PAULI_LETTERS = "IXYZ"

# Таблица умножения одиночных Паули: (a, b) -> (фаза, результат)
_PAULI_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


# ============================================================================
# СТРОКИ ПАУЛИ
# ============================================================================

@dataclass(frozen=True)
class PauliTerm:
    """
    Взвешенная строка Паули

    Attributes:
        coefficient (complex): Коэффициент (несёт всю фазу)
        letters (str): По одной букве I/X/Y/Z на кубит
    """
    coefficient: complex
    letters: str

    def __post_init__(self):
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        if any(ch not in PAULI_LETTERS for ch in self.letters):
            raise ValueError(f"Недопустимые буквы Паули: {self.letters!r}")

    @property
    def qubit_count(self) -> int:
        return len(self.letters)

    @classmethod
    def identity(cls, qubit_count: int, coefficient: complex = 1.0) -> "PauliTerm":
        return cls(coefficient, "I" * qubit_count)

    @classmethod
    def from_sparse(cls, qubit_count: int, ops: Mapping[int, str], coefficient: complex = 1.0) -> "PauliTerm":
        """
        Строит терм по словарю {кубит: буква}, остальные кубиты I

        Args:
            qubit_count (int): Число кубитов
            ops (Mapping[int, str]): Нетривиальные буквы
            coefficient (complex): Коэффициент
        """
        letters = ["I"] * qubit_count
        for qubit, letter in ops.items():
            if not 0 <= qubit < qubit_count:
                raise ValueError(f"Кубит {qubit} вне диапазона [0, {qubit_count})")
            letters[qubit] = letter
        return cls(coefficient, "".join(letters))

    def is_identity(self) -> bool:
        return set(self.letters) <= {"I"}


def multiply_pauli(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """
    Произведение двух строк Паули a·b с фазой, свёрнутой в коэффициент

    Args:
        a (PauliTerm): Левый множитель
        b (PauliTerm): Правый множитель

    Returns:
        PauliTerm: Единственный терм, равный операторному произведению

    Raises:
        DimensionError: Если длины строк различаются
    """
    if len(a.letters) != len(b.letters):
        raise DimensionError(
            f"Длины строк Паули не совпадают: {len(a.letters)} и {len(b.letters)}"
        )
    phase = 1 + 0j
    letters = []
    for x, y in zip(a.letters, b.letters):
        factor, letter = _PAULI_PRODUCT[(x, y)]
        phase *= factor
        letters.append(letter)
    return PauliTerm(a.coefficient * b.coefficient * phase, "".join(letters))


# ============================================================================
# СУММЫ СТРОК ПАУЛИ
# ============================================================================

@dataclass(frozen=True)
class OperatorSum:
    """
    Взвешенная сумма строк Паули (может быть неэрмитовой)

    Attributes:
        qubit_count (int): Число кубитов
        terms (Mapping[str, complex]): letters -> коэффициент
        tolerance (float): Допуск отбрасывания коэффициентов
    """
    qubit_count: int
    terms: Mapping[str, complex] = field(default_factory=dict)
    tolerance: float = DROP_TOLERANCE

    def __post_init__(self):
        cleaned = {}
        for letters, coefficient in self.terms.items():
            if len(letters) != self.qubit_count:
                raise DimensionError(
                    f"Строка {letters!r} не соответствует {self.qubit_count} кубитам"
                )
            coefficient = complex(coefficient)
            if abs(coefficient) >= self.tolerance:
                cleaned[letters] = coefficient
        object.__setattr__(self, "terms", cleaned)

    # ------------------------------------------------------------------------
    # Конструкторы
    # ------------------------------------------------------------------------

    @classmethod
    def zero(cls, qubit_count: int, tolerance: float = DROP_TOLERANCE) -> "OperatorSum":
        return cls(qubit_count, {}, tolerance)

    @classmethod
    def from_terms(cls, qubit_count: int, terms: Iterable[PauliTerm],
                   tolerance: float = DROP_TOLERANCE) -> "OperatorSum":
        """Складывает термы с объединением одинаковых строк"""
        accumulated = {}
        for term in terms:
            if term.qubit_count != qubit_count:
                raise DimensionError(
                    f"Терм на {term.qubit_count} кубитах в сумме на {qubit_count} кубитах"
                )
            accumulated[term.letters] = accumulated.get(term.letters, 0j) + term.coefficient
        return cls(qubit_count, accumulated, tolerance)

    # ------------------------------------------------------------------------
    # Доступ к термам
    # ------------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        for letters in sorted(self.terms):
            yield PauliTerm(self.terms[letters], letters)

    def coefficient(self, letters: str) -> complex:
        return self.terms.get(letters, 0j)

    @property
    def identity_coefficient(self) -> complex:
        return self.terms.get("I" * self.qubit_count, 0j)

    def non_identity_terms(self) -> list:
        """Все термы, кроме тождественного, в лексикографическом порядке"""
        identity = "I" * self.qubit_count
        return [term for term in self if term.letters != identity]

    def is_hermitian(self) -> bool:
        """
        Эрмитовость суммы: все коэффициенты вещественны в пределах допуска
        (различные строки Паули линейно независимы и эрмитовы)
        """
        return all(abs(c.imag) < self.tolerance for c in self.terms.values())

    def is_diagonal(self) -> bool:
        """Только буквы I/Z: оператор диагонален в вычислительном базисе"""
        return all(set(letters) <= {"I", "Z"} for letters in self.terms)

    # ------------------------------------------------------------------------
    # Арифметика
    # ------------------------------------------------------------------------

    def _check(self, other: "OperatorSum"):
        if self.qubit_count != other.qubit_count:
            raise DimensionError(
                f"Число кубитов не совпадает: {self.qubit_count} и {other.qubit_count}"
            )

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        self._check(other)
        merged = dict(self.terms)
        for letters, coefficient in other.terms.items():
            merged[letters] = merged.get(letters, 0j) + coefficient
        return OperatorSum(self.qubit_count, merged, self.tolerance)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + other.scaled(-1)

    def scaled(self, factor: complex) -> "OperatorSum":
        return OperatorSum(
            self.qubit_count,
            {letters: factor * c for letters, c in self.terms.items()},
            self.tolerance,
        )

    def adjoint(self) -> "OperatorSum":
        return adjoint(self)

    # ------------------------------------------------------------------------
    # Текстовый формат
    # ------------------------------------------------------------------------

    def to_text(self) -> str:
        """
        Текстовая форма: одна строка `<re> <im> <letters>` на терм,
        строки отсортированы по letters
        """
        lines = []
        for letters in sorted(self.terms):
            c = self.terms[letters]
            # + 0.0 превращает -0.0 в 0.0
            lines.append(f"{c.real + 0.0!r} {c.imag + 0.0!r} {letters}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, qubit_count: int = None,
                  tolerance: float = DROP_TOLERANCE) -> "OperatorSum":
        """
        Разбирает текстовую форму to_text

        Args:
            text (str): Текст
            qubit_count (int): Число кубитов (нужно для пустой суммы)
            tolerance (float): Допуск отбрасывания
        """
        terms = []
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"Строка {number}: ожидается '<re> <im> <letters>', получено {line!r}")
            re_part, im_part, letters = parts
            terms.append(PauliTerm(complex(float(re_part), float(im_part)), letters))
        if qubit_count is None:
            if not terms:
                raise ValueError("Для пустой суммы нужно указать qubit_count")
            qubit_count = terms[0].qubit_count
        return cls.from_terms(qubit_count, terms, tolerance)


def add_into(total: OperatorSum, term: PauliTerm) -> OperatorSum:
    """
    Добавляет терм в сумму с объединением по строке Паули

    Args:
        total (OperatorSum): Сумма
        term (PauliTerm): Добавляемый терм

    Returns:
        OperatorSum: Новая упрощённая сумма

    Raises:
        DimensionError: Если число кубитов не совпадает
    """
    if term.qubit_count != total.qubit_count:
        raise DimensionError(
            f"Терм на {term.qubit_count} кубитах в сумме на {total.qubit_count} кубитах"
        )
    merged = dict(total.terms)
    merged[term.letters] = merged.get(term.letters, 0j) + term.coefficient
    return OperatorSum(total.qubit_count, merged, total.tolerance)


def multiply_sums(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    """Произведение сумм a·b раскрытием скобок через multiply_pauli"""
    a._check(b)
    products = (
        multiply_pauli(PauliTerm(ca, la), PauliTerm(cb, lb))
        for la, ca in a.terms.items()
        for lb, cb in b.terms.items()
    )
    return OperatorSum.from_terms(a.qubit_count, products, min(a.tolerance, b.tolerance))


def adjoint(total: OperatorSum) -> OperatorSum:
    """Эрмитово сопряжение: строки Паули самосопряжены, сопрягаются коэффициенты"""
    return OperatorSum(
        total.qubit_count,
        {letters: c.conjugate() for letters, c in total.terms.items()},
        total.tolerance,
    )


# ============================================================================
# ФЕРМИОННЫЕ ОПЕРАТОРЫ
# ============================================================================

@dataclass(frozen=True)
class FermionTerm:
    """
    Произведение лестничных операторов с коэффициентом

    Attributes:
        coefficient (complex): Коэффициент
        factors (tuple): Упорядоченные пары (мода, dagger); первый множитель самый левый
    """
    coefficient: complex
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        object.__setattr__(self, "factors", tuple((int(m), bool(d)) for m, d in self.factors))


@dataclass(frozen=True)
class FermionSum:
    """
    Сумма фермионных термов на mode_count модах

    Attributes:
        mode_count (int): Число спин-орбиталей
        terms (tuple): Последовательность FermionTerm
    """
    mode_count: int
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            for mode, _ in term.factors:
                if not 0 <= mode < self.mode_count:
                    raise ValueError(f"Мода {mode} вне диапазона [0, {self.mode_count})")

    def __add__(self, other: "FermionSum") -> "FermionSum":
        if self.mode_count != other.mode_count:
            raise DimensionError(f"Число мод не совпадает: {self.mode_count} и {other.mode_count}")
        return FermionSum(self.mode_count, self.terms + other.terms)

    def __mul__(self, other: "FermionSum") -> "FermionSum":
        """Произведение сумм: множители термов конкатенируются"""
        if self.mode_count != other.mode_count:
            raise DimensionError(f"Число мод не совпадает: {self.mode_count} и {other.mode_count}")
        return FermionSum(self.mode_count, tuple(
            FermionTerm(x.coefficient * y.coefficient, x.factors + y.factors)
            for x in self.terms for y in other.terms
        ))

    def scaled(self, factor: complex) -> "FermionSum":
        return FermionSum(self.mode_count, tuple(
            FermionTerm(factor * term.coefficient, term.factors) for term in self.terms
        ))

    def hermitian_conjugate(self) -> "FermionSum":
        """(c·a_1…a_k)† = c̄·a_k†…a_1†"""
        return FermionSum(self.mode_count, tuple(
            FermionTerm(term.coefficient.conjugate(),
                        tuple((mode, not dagger) for mode, dagger in reversed(term.factors)))
            for term in self.terms
        ))


def ladder(mode_count: int, mode: int, dagger: bool) -> FermionSum:
    """Одиночный оператор a_p или a†_p"""
    return FermionSum(mode_count, (FermionTerm(1.0, ((mode, dagger),)),))


def number_operator(mode_count: int, mode: int) -> FermionSum:
    """n_p = a†_p a_p"""
    return FermionSum(mode_count, (FermionTerm(1.0, ((mode, True), (mode, False))),))


def fermion_identity(mode_count: int, coefficient: complex = 1.0) -> FermionSum:
    return FermionSum(mode_count, (FermionTerm(coefficient, ()),))


# ============================================================================
# ПРЕОБРАЗОВАНИЕ ЙОРДАНА-ВИГНЕРА
# ============================================================================

def _jw_ladder(mode_count: int, mode: int, dagger: bool) -> OperatorSum:
    """
    a_p  -> ½(X_p + iY_p) Z_{p-1}…Z_0
    a†_p -> ½(X_p - iY_p) Z_{p-1}…Z_0
    """
    string = {q: "Z" for q in range(mode)}
    x_term = PauliTerm.from_sparse(mode_count, {**string, mode: "X"}, 0.5)
    y_term = PauliTerm.from_sparse(mode_count, {**string, mode: "Y"}, -0.5j if dagger else 0.5j)
    return OperatorSum.from_terms(mode_count, (x_term, y_term))


def jordan_wigner(operator: FermionSum) -> OperatorSum:
    """
    Отображение Йордана-Вигнера фермионной суммы в сумму строк Паули

    Каждый терм раскрывается произведением образов лестничных операторов,
    результат упрощается (нормальное упорядочение не требуется).

    Args:
        operator (FermionSum): Фермионный оператор

    Returns:
        OperatorSum: Образ на mode_count кубитах
    """
    n = operator.mode_count
    images = {}
    total = OperatorSum.zero(n)
    for term in operator.terms:
        product = OperatorSum(n, {"I" * n: term.coefficient})
        for factor in term.factors:
            if factor not in images:
                images[factor] = _jw_ladder(n, *factor)
            product = multiply_sums(product, images[factor])
        total = total + product
    return total
