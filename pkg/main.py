"""
main.py
=======
Точка входа симулятора tcvqite.
Настраивает логирование, регистрирует подкоманды и запускает
выбранную; код завершения возвращается процессу.
"""

import argparse
import json
import logging
import sys
from dataclasses import fields
from config import RunConfig, LIST_ITEM_TYPES, LOG_LEVEL, VERSION, parse_config
from exceptions import ConfigError, NumericalFailure, TcvqiteError
from commands import build, exact, evolve, sweep, optimize_j

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INTERRUPTED = 130

# Порядок регистрации определяет порядок подкоманд в справке
COMMANDS = (build, exact, evolve, sweep, optimize_j)


def setup_logging(verbose: bool = False):
    """
    Настройка логгера: stderr, уровень из TCVQITE_LOG_LEVEL или DEBUG при --verbose
    """
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL, logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True,
    )


def _add_config_flags(parser: argparse.ArgumentParser):
    """Флаги --key-with-dashes для каждого поля RunConfig (None: не переопределять)"""
    for item in fields(RunConfig):
        flag = "--" + item.name.replace("_", "-")
        help = item.metadata.get("help", "")
        if item.name in LIST_ITEM_TYPES:
            parser.add_argument(flag, dest=item.name, nargs="+", type=LIST_ITEM_TYPES[item.name], default=None, help=help)
        elif item.type is bool:
            parser.add_argument(flag, dest=item.name, action="store_const", const=True, default=None, help=help)
        else:
            parser.add_argument(flag, dest=item.name, type=item.type, default=None, help=help)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON-файл конфигурации или manifest.json")
    common.add_argument("--verbose", action="store_true", help="Подробный лог (DEBUG)")
    _add_config_flags(common)

    parser = argparse.ArgumentParser(
        prog="tcvqite",
        description="Вариационная эволюция в мнимом времени для транскоррелированной модели Хаббарда",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        module.register(subparsers, [common])
    return parser


def _error_line(stream, kind: str, field, message: str, **extra):
    payload = {"kind": kind, "field": field, "message": message}
    payload.update({key: value for key, value in extra.items() if value is not None})
    print(f"error {json.dumps(payload, sort_keys=True, ensure_ascii=False)}", file=stream, flush=True)


def run_command(handler, path=None, overrides: dict = None, err=None) -> int:
    """
    Собирает конфигурацию и выполняет обработчик подкоманды

    Args:
        handler: Обработчик, принимающий RunConfig
        path: JSON-файл конфигурации или None
        overrides (dict): Значения флагов (None: не переопределять)
        err: Поток для строки ошибки (по умолчанию stderr)

    Returns:
        int: 0 (успех), 2 (конфигурация), 3 (численная ошибка), 130 (прерывание), 1 (прочее)
    """
    err = err or sys.stderr
    try:
        cfg = parse_config(path, overrides)
        logger.info(f"Старт {handler.__name__}: {cfg.run_dir()}")
        handler(cfg)
        logger.info(f"Готово {handler.__name__}")
        return EXIT_OK
    except ConfigError as e:
        logger.error(f"Ошибка конфигурации: {e}")
        _error_line(err, "config", e.field, str(e), line=e.line, column=e.column)
        return EXIT_CONFIG
    except NumericalFailure as e:
        logger.error(f"Численная ошибка: {e}")
        _error_line(err, "numerical", None, str(e))
        return EXIT_NUMERICAL
    except KeyboardInterrupt:
        logger.error("Прервано пользователем")
        _error_line(err, "interrupted", None, "interrupted")
        return EXIT_INTERRUPTED
    except (TcvqiteError, ValueError) as e:
        logger.error(f"Ошибка: {e}")
        _error_line(err, "invalid", None, str(e))
        return EXIT_FAILURE


def main(argv=None) -> int:
    """
    Разбирает аргументы и выполняет подкоманду

    Returns:
        int: Код завершения (0, 1, 2, 3, 130)
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    overrides = {item.name: getattr(args, item.name) for item in fields(RunConfig)}
    return run_command(args.handler, args.config, overrides)


if __name__ == "__main__":
    sys.exit(main())
