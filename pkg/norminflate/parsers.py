"""Value parsers for configuration keys.

Values arrive either typed (from a JSON config file) or as text (from
``--set KEY=VALUE``); each parser accepts both.
"""
from functools import lru_cache
import json
from typing import Any, Tuple

TRUE_WORDS = frozenset(["1", "true", "yes", "on"])
FALSE_WORDS = frozenset(["0", "false", "no", "off"])


@lru_cache(maxsize=2 ** 10)
def _parse_text(val: str) -> Any:
    val = val.strip()
    try:
        return json.loads(val)
    except json.JSONDecodeError:
        # bare lists such as 4,8,16
        if "," in val:
            return [_parse_text(part) for part in val.split(",") if part.strip()]
        return val


def parse_bool(val: Any) -> bool:
    if isinstance(val, bool):
        return val
    if isinstance(val, str) and val.strip().lower() in TRUE_WORDS | FALSE_WORDS:
        return val.strip().lower() in TRUE_WORDS
    if isinstance(val, int) and val in (0, 1):
        return bool(val)
    raise ValueError(f"Expected a boolean, got {val!r}")


def parse_int(val: Any) -> int:
    if isinstance(val, str):
        val = _parse_text(val)
    if isinstance(val, bool):
        raise ValueError(f"Expected an integer, got {val!r}")
    if isinstance(val, int):
        return val
    if isinstance(val, float) and val.is_integer():
        return int(val)
    raise ValueError(f"Expected an integer, got {val!r}")


def parse_float(val: Any) -> float:
    if isinstance(val, str):
        val = _parse_text(val)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValueError(f"Expected a number, got {val!r}")
    return float(val)


def parse_str(val: Any) -> str:
    if not isinstance(val, str):
        raise ValueError(f"Expected a string, got {val!r}")
    return val


def _as_items(val: Any) -> list:
    if isinstance(val, str):
        val = _parse_text(val)
    if isinstance(val, (list, tuple)):
        return list(val)
    return [val]


def parse_int_list(val: Any) -> Tuple[int, ...]:
    return tuple(parse_int(item) for item in _as_items(val))


def parse_float_list(val: Any) -> Tuple[float, ...]:
    return tuple(parse_float(item) for item in _as_items(val))


def parse_assignment(text: str) -> Tuple[str, str]:
    """Split ``KEY=VALUE`` as given to ``--set``."""
    key, sep, value = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ValueError(f"Expected KEY=VALUE, got {text!r}")
    return key, value
