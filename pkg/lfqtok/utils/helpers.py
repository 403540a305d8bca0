from __future__ import annotations

import math
from typing import Any, Dict, Iterable, Mapping


def prod(values: Iterable[int]) -> int:
    return math.prod(int(v) for v in values)


def largest_divisor_at_most(n: int, cap: int) -> int:
    """Largest d <= cap with n % d == 0 (group count for a channel count)."""
    for d in range(min(n, cap), 0, -1):
        if n % d == 0:
            return d
    return 1


def unflatten_keys(flat: Mapping[str, Any], sep: str = ".") -> Dict[str, Any]:
    """Turn ``{"a.b": 1, "c": 2}`` into ``{"a": {"b": 1}, "c": 2}``."""
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        parts = str(key).split(sep)
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ValueError(f"Key '{key}' conflicts with scalar key '{part}'")
            node = child
        if parts[-1] in node and isinstance(node[parts[-1]], dict):
            raise ValueError(f"Key '{key}' conflicts with nested keys below it")
        node[parts[-1]] = value
    return nested


def flatten_keys(nested: Mapping[str, Any], sep: str = ".", prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in nested.items():
        name = f"{prefix}{sep}{key}" if prefix else str(key)
        if isinstance(value, Mapping):
            flat |= flatten_keys(value, sep=sep, prefix=name)
        else:
            flat[name] = value
    return flat
