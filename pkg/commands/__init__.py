"""
commands
========
Обработчики подкоманд CLI. Каждый модуль экспортирует register(subparsers, parents).
Результаты печатаются в stdout строками "ключ значение".
"""


def emit(key: str, value):
    """Печатает строку результата; числа с плавающей точкой в формате %.12e"""
    if isinstance(value, float):
        value = "%.12e" % value
    elif value is None:
        value = ""
    print(f"{key} {value}", flush=True)
