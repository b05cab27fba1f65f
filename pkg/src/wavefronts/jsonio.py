"""Deterministic JSON and CSV emission.

Floats are rendered with 17 significant digits, keys sorted, so that
identical invocations produce byte-identical output.  +infinity is the
object {"inf": true} in JSON and an empty cell in CSV.
"""

from __future__ import annotations

import math

INF = object()   # marker for +infinity in payload trees


def _render(obj, parts: list) -> None:
    if obj is INF:
        parts.append('{"inf":true}')
    elif obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, str):
        parts.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        if math.isinf(obj):
            parts.append('{"inf":true}')
        elif math.isnan(obj):
            parts.append('"nan"')
        else:
            parts.append(format(obj, ".17g"))
    elif isinstance(obj, dict):
        parts.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                parts.append(",")
            _render(str(key), parts)
            parts.append(":")
            _render(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(obj):
            if i:
                parts.append(",")
            _render(item, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    parts: list = []
    _render(obj, parts)
    return "".join(parts)


def csv_cell(v) -> str:
    if v is None or v is INF or (isinstance(v, float) and math.isinf(v)):
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path: str, header: list, rows: list, config_lines=()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in config_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(csv_cell(v) for v in row) + "\n")
