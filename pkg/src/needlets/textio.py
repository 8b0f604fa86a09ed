"""Deterministic text serialization: floats at 17 significant digits.

Seventeen significant decimal digits round-trip any IEEE double exactly, so
files written here are both byte-stable across runs and lossless to parse.
"""

from __future__ import annotations

import json


def fmt(value: float) -> str:
    """Render a float as a 17-significant-digit decimal literal."""
    return format(float(value), ".17g")


def dumps_17g(obj, indent: int = 2) -> str:
    """JSON text with every float rendered through ``fmt``.

    Supports the JSON value types plus numpy scalars via ``float``/``int``
    coercion done by the caller; dict insertion order is preserved.
    """
    pieces: list[str] = []
    _write(obj, pieces, indent, 0)
    return "".join(pieces) + "\n"


def _write(obj, out: list, indent: int, depth: int) -> None:
    pad = " " * (indent * (depth + 1))
    close_pad = " " * (indent * depth)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for pos, (key, val) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(key))}: ")
            _write(val, out, indent, depth + 1)
            out.append(",\n" if pos < len(obj) - 1 else "\n")
        out.append(close_pad + "}")
    elif isinstance(obj, (list, tuple)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        # Short scalar lists stay on one line for readability.
        if all(not isinstance(v, (dict, list, tuple)) for v in items) and len(items) <= 8:
            out.append("[" + ", ".join(_scalar(v) for v in items) + "]")
            return
        out.append("[\n")
        for pos, val in enumerate(items):
            out.append(pad)
            _write(val, out, indent, depth + 1)
            out.append(",\n" if pos < len(items) - 1 else "\n")
        out.append(close_pad + "]")
    else:
        out.append(_scalar(obj))


def _scalar(obj) -> str:
    if hasattr(obj, "item") and not isinstance(obj, (bool, int, float, str)):
        return _scalar(obj.item())  # numpy scalar
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize value of type {type(obj).__name__}")
