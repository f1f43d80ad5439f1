"""
config.py
=========
Модуль конфигурации симулятора.
Переменные окружения загружаются из файла .env через python-dotenv,
параметры запуска читаются из JSON-файла и переопределяются флагами CLI.
"""

import json
import math
import os
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from dotenv import load_dotenv
from exceptions import ConfigError

# Загружаем переменные из файла .env в окружение
load_dotenv()

VERSION = "0.1.0"


def _env_int(name: str, default: int, minimum: int = 1) -> int:
    """
    Читает целочисленную переменную окружения

    Args:
        name (str): Имя переменной
        default (int): Значение по умолчанию
        minimum (int): Минимально допустимое значение

    Returns:
        int: Значение переменной
    """
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"Переменная {name} должна быть целым числом, получено {raw!r}", field=name)
    if value < minimum:
        raise ConfigError(f"Переменная {name} должна быть >= {minimum}, получено {value}", field=name)
    return value


# Размер пула процессов по умолчанию; --workers его не ограничивает
THREADS = _env_int("TCVQITE_THREADS", os.cpu_count() or 1)

# Уровень логирования по умолчанию
LOG_LEVEL = os.getenv("TCVQITE_LOG_LEVEL", "INFO").upper()

# Предел числа кубитов для плотных матриц оракула
DENSE_QUBIT_CAP = _env_int("TCVQITE_DENSE_QUBIT_CAP", 14)

# Каталог для результатов запусков
RUNS_DIR = os.getenv("TCVQITE_RUNS_DIR", "runs")


# ============================================================================
# КОНФИГУРАЦИЯ ЗАПУСКА
# ============================================================================

METHODS = ("imaginary_time", "gradient_descent")
TARGETS = ("right_tc", "left_tc", "regular")
TANGENT_MODES = ("analytic", "finite_difference")
OPERATORS = ("hubbard", "tc", "noninteracting", "gutzwiller")


def default_j_grid() -> list:
    """Сетка J от -1.0 до 0.0 с шагом 0.1"""
    return [round(-1.0 + 0.1 * k, 10) for k in range(11)]


@dataclass
class RunConfig:
    """
    Плоская конфигурация запуска: решётка, параметры Хаббарда, анзац,
    эволюция, эксперимент и путь вывода. Ключи JSON совпадают с флагами CLI.
    """
    name: str = field(default="default", metadata={"help": "Имя запуска (подкаталог вывода)"})
    output_dir: str = field(default=RUNS_DIR, metadata={"help": "Корневой каталог вывода"})
    rows: int = field(default=2, metadata={"help": "Число строк решётки"})
    cols: int = field(default=2, metadata={"help": "Число столбцов решётки"})
    t: float = field(default=1.0, metadata={"help": "Амплитуда перескока t"})
    u: float = field(default=4.0, metadata={"help": "Кулоновское отталкивание U"})
    j: float = field(default=0.0, metadata={"help": "Сила преобразования Гутцвиллера J"})
    layers: int = field(default=1, metadata={"help": "Число слоёв анзаца"})
    particles: int = field(default=None, metadata={"help": "Число частиц (по умолчанию из основного состояния)"})
    perturb_bound: float = field(default=0.02 * math.pi, metadata={"help": "Граница случайного возмущения параметров"})
    seed: int = field(default=0, metadata={"help": "Базовый seed"})
    dtau: float = field(default=0.01, metadata={"help": "Шаг мнимого времени"})
    steps: int = field(default=500, metadata={"help": "Число шагов Эйлера"})
    svd_cutoff: float = field(default=1e-6, metadata={"help": "Порог сингулярных чисел"})
    tangent_mode: str = field(default="analytic", metadata={"help": "Касательные: analytic | finite_difference"})
    fd_step: float = field(default=1e-10, metadata={"help": "Шаг конечных разностей"})
    record_interval: int = field(default=10, metadata={"help": "Запись каждые N шагов"})
    method: str = field(default="imaginary_time", metadata={"help": "Метод одиночного запуска"})
    target: str = field(default="right_tc", metadata={"help": "Цель одиночного запуска"})
    methods: list = field(default_factory=lambda: list(METHODS), metadata={"help": "Методы развёртки"})
    targets: list = field(default_factory=lambda: ["right_tc"], metadata={"help": "Цели развёртки"})
    layers_list: list = field(default_factory=lambda: [0, 1, 2, 3], metadata={"help": "Глубины развёртки"})
    repetitions: int = field(default=10, metadata={"help": "Число повторов"})
    j_grid: list = field(default_factory=default_j_grid, metadata={"help": "Сетка J для optimize-j"})
    operator: str = field(default="tc", metadata={"help": "Оператор для build"})
    dump_vectors: bool = field(default=False, metadata={"help": "Сохранить собственные векторы (exact)"})
    workers: int = field(default=THREADS, metadata={"help": "Размер пула процессов (по умолчанию TCVQITE_THREADS, явное значение не ограничивается)"})

    def to_dict(self) -> dict:
        """Эффективная конфигурация для manifest.json"""
        return asdict(self)

    # ------------------------------------------------------------------------
    # Преобразование в объекты предметной области
    # ------------------------------------------------------------------------

    def lattice(self):
        from model import LatticeSpec
        return LatticeSpec(rows=self.rows, cols=self.cols)

    def hubbard_params(self):
        from model import HubbardParams
        return HubbardParams(t=self.t, u=self.u, j=self.j)

    def evolution_config(self):
        from evolution import EvolutionConfig, TangentMode
        return EvolutionConfig(
            dtau=self.dtau,
            steps=self.steps,
            svd_cutoff=self.svd_cutoff,
            tangent_mode=TangentMode(self.tangent_mode),
            fd_step=self.fd_step,
            record_interval=self.record_interval,
        )

    def experiment_spec(self, single: bool = False):
        """
        Собирает ExperimentSpec

        Args:
            single (bool): True для одиночного запуска (layers/method/target),
                False для развёрток (layers_list/methods/targets)
        """
        from experiments import ExperimentSpec, Method, TargetState
        return ExperimentSpec(
            lattice=self.lattice(),
            params=self.hubbard_params(),
            layers_list=(self.layers,) if single else tuple(self.layers_list),
            repetitions=1 if single else self.repetitions,
            methods=(Method(self.method),) if single else tuple(Method(m) for m in self.methods),
            targets=(TargetState(self.target),) if single else tuple(TargetState(t) for t in self.targets),
            evolution=self.evolution_config(),
            seed_base=self.seed,
            perturb_bound=self.perturb_bound,
            particles=self.particles,
            workers=self.workers,
        )

    def run_dir(self) -> Path:
        """Каталог вывода запуска: output_dir/name"""
        return Path(self.output_dir) / self.name


# ============================================================================
# ПРИВЕДЕНИЕ ТИПОВ И ПРОВЕРКА
# ============================================================================

_INT_FIELDS = {"rows", "cols", "layers", "particles", "seed", "steps", "record_interval", "repetitions", "workers"}
_FLOAT_FIELDS = {"t", "u", "j", "perturb_bound", "dtau", "svd_cutoff", "fd_step"}
_STR_FIELDS = {"name", "output_dir", "tangent_mode", "method", "target", "operator"}
LIST_ITEM_TYPES = {"methods": str, "targets": str, "layers_list": int, "j_grid": float}
_OPTIONAL_FIELDS = {"particles"}


def _coerce_scalar(key: str, value, kind):
    """Приводит скаляр к типу поля или бросает ConfigError"""
    if kind is int:
        # bool является подклассом int, но в конфиге не допустим
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"Поле {key} должно быть целым числом, получено {value!r}", field=key)
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"Поле {key} должно быть числом, получено {value!r}", field=key)
        if not math.isfinite(value):
            raise ConfigError(f"Поле {key} должно быть конечным, получено {value!r}", field=key)
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"Поле {key} должно быть строкой, получено {value!r}", field=key)
        return value
    raise ConfigError(f"Неизвестный тип поля {key}", field=key)


def _coerce(key: str, value):
    """Приводит значение ключа конфигурации к типу поля RunConfig"""
    if value is None and key in _OPTIONAL_FIELDS:
        return None
    if key in _INT_FIELDS:
        return _coerce_scalar(key, value, int)
    if key in _FLOAT_FIELDS:
        return _coerce_scalar(key, value, float)
    if key in _STR_FIELDS:
        return _coerce_scalar(key, value, str)
    if key in LIST_ITEM_TYPES:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"Поле {key} должно быть списком, получено {value!r}", field=key)
        return [_coerce_scalar(key, item, LIST_ITEM_TYPES[key]) for item in value]
    if key == "dump_vectors":
        if not isinstance(value, bool):
            raise ConfigError(f"Поле {key} должно быть true/false, получено {value!r}", field=key)
        return value
    raise ConfigError(f"Неизвестный ключ конфигурации: {key}", field=key)


def validate(cfg: RunConfig) -> RunConfig:
    """
    Проверяет конфигурацию целиком до начала вычислений

    Args:
        cfg (RunConfig): Конфигурация

    Returns:
        RunConfig: Та же конфигурация

    Raises:
        ConfigError: С именем первого некорректного поля
    """
    def fail(key, message):
        raise ConfigError(f"{key}: {message}", field=key)

    if not cfg.name or "/" in cfg.name or "\\" in cfg.name or cfg.name in (".", "..") or ".." in cfg.name:
        fail("name", f"недопустимое имя запуска {cfg.name!r}")
    if cfg.rows < 1:
        fail("rows", "должно быть >= 1")
    if cfg.cols < 1:
        fail("cols", "должно быть >= 1")
    if cfg.layers < 0:
        fail("layers", "должно быть >= 0")
    sites = cfg.rows * cfg.cols
    if cfg.particles is not None and not 0 <= cfg.particles <= 2 * sites:
        fail("particles", f"должно лежать в [0, {2 * sites}]")
    if cfg.perturb_bound < 0:
        fail("perturb_bound", "должно быть >= 0")
    if cfg.dtau <= 0:
        fail("dtau", "должно быть > 0")
    if cfg.steps < 0:
        fail("steps", "должно быть >= 0")
    if cfg.svd_cutoff <= 0:
        fail("svd_cutoff", "должно быть > 0")
    if cfg.fd_step <= 0:
        fail("fd_step", "должно быть > 0")
    if cfg.record_interval < 1:
        fail("record_interval", "должно быть >= 1")
    if cfg.tangent_mode not in TANGENT_MODES:
        fail("tangent_mode", f"ожидается одно из {TANGENT_MODES}")
    if cfg.method not in METHODS:
        fail("method", f"ожидается одно из {METHODS}")
    if cfg.target not in TARGETS:
        fail("target", f"ожидается одно из {TARGETS}")
    if not cfg.methods or any(m not in METHODS for m in cfg.methods):
        fail("methods", f"непустой список из {METHODS}")
    if not cfg.targets or any(t not in TARGETS for t in cfg.targets):
        fail("targets", f"непустой список из {TARGETS}")
    if not cfg.layers_list or any(layer < 0 for layer in cfg.layers_list):
        fail("layers_list", "непустой список неотрицательных целых")
    if cfg.repetitions < 1:
        fail("repetitions", "должно быть >= 1")
    if not cfg.j_grid:
        fail("j_grid", "сетка не должна быть пустой")
    if cfg.operator not in OPERATORS:
        fail("operator", f"ожидается одно из {OPERATORS}")
    if cfg.workers < 1:
        fail("workers", "должно быть >= 1")
    return cfg


def _read_config_file(path) -> dict:
    """
    Читает JSON-файл конфигурации (пустой файл допустим).
    Файл manifest.json также принимается: используется его объект "config".
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Не удалось прочитать файл конфигурации {path}: {e}", field="config")
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"Ошибка разбора {path}: строка {e.lineno}, колонка {e.colno}: {e.msg}",
            field="config", line=e.lineno, column=e.colno
        )
    if not isinstance(data, dict):
        raise ConfigError(f"Файл {path} должен содержать JSON-объект", field="config")
    # manifest.json, записанный предыдущим запуском
    if "config" in data and "versions" in data:
        data = data["config"]
        if not isinstance(data, dict):
            raise ConfigError(f"Поле config в {path} должно быть объектом", field="config")
    return data


def parse_config(path=None, overrides: dict = None) -> RunConfig:
    """
    Строит эффективную конфигурацию: значения по умолчанию ← файл ← флаги

    Args:
        path: Путь к JSON-файлу (или None)
        overrides (dict): Значения флагов CLI (None-значения игнорируются)

    Returns:
        RunConfig: Проверенная конфигурация

    Raises:
        ConfigError: Ошибка разбора или проверки
    """
    known = {f.name for f in fields(RunConfig)}
    values = {}

    if path is not None:
        for key, value in _read_config_file(path).items():
            if key not in known:
                raise ConfigError(f"Неизвестный ключ конфигурации: {key}", field=key)
            values[key] = _coerce(key, value)

    # Флаги имеют приоритет над файлом
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"Неизвестный ключ конфигурации: {key}", field=key)
        values[key] = _coerce(key, value)

    return validate(RunConfig(**values))


# Экспортируем параметры для использования в других модулях
__all__ = [
    "VERSION",
    "THREADS",
    "LOG_LEVEL",
    "DENSE_QUBIT_CAP",
    "RUNS_DIR",
    "RunConfig",
    "LIST_ITEM_TYPES",
    "parse_config",
    "validate",
]
