"""
exceptions.py
=============
Иерархия исключений проекта.
CLI переводит их в коды возврата: ConfigError → 2, NumericalFailure → 3.
"""


class TcvqiteError(Exception):
    """Базовое исключение симулятора"""


class DimensionError(TcvqiteError, ValueError):
    """Несовпадение числа кубитов, длины векторов или параметров"""


class ConfigError(TcvqiteError, ValueError):
    """
    Ошибка конфигурации запуска

    Args:
        message (str): Описание ошибки
        field (str): Имя поля или переменной окружения
        line (int): Строка в JSON-файле (для синтаксических ошибок)
        column (int): Колонка в JSON-файле
    """

    def __init__(self, message: str, field: str = None, line: int = None, column: int = None):
        super().__init__(message)
        self.field = field
        self.line = line
        self.column = column


class NumericalFailure(TcvqiteError, RuntimeError):
    """
    Численный сбой: SVD не сошлось, нечисловые элементы A/C,
    расходимость шага, несходимость степенного метода

    Args:
        message (str): Описание сбоя
        trace: Частичная траектория эволюции (если сбой произошёл во время evolve)
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
